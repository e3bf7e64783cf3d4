#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>

#include "cantor/backends.hpp"

namespace cantor {

struct CacheEntry {
  std::string key;
  BackendResponse response;
  std::string created_at;  // ISO 8601 UTC
};

// Content-addressed response store. Entries live in JSONL shard files named
// by the first two hex digits of the key, so concurrent workers append to
// disjoint-or-append-safe files; each entry is written as a single line.
// Lookups are exact-match only.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  std::optional<BackendResponse> lookup(const std::string& key) const;
  void store(const std::string& key, const BackendResponse& response);

  struct Stats {
    size_t entries = 0;
    size_t shards = 0;
    uintmax_t bytes = 0;
  };
  Stats stats() const;
  void clear();

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path shard_path(const std::string& key) const;

  std::filesystem::path dir_;
  mutable std::mutex mutex_;
  std::map<std::string, BackendResponse> index_;
};

// Serves exact-key hits from the cache (source=Cache) and stores misses
// after completing them through the inner backend.
class CachingBackend : public Backend {
 public:
  CachingBackend(BackendPtr inner, std::shared_ptr<ResponseCache> cache);

  BackendResponse complete(const BackendRequest& request) override;
  bool multimodal() const override { return inner_->multimodal(); }
  std::string name() const override { return inner_->name(); }

 private:
  BackendPtr inner_;
  std::shared_ptr<ResponseCache> cache_;
};

}  // namespace cantor
