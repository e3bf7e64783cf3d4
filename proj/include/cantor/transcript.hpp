#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <vector>

#include "cantor/backends.hpp"

namespace cantor {

// One transcript line:
// {key, model_id, prompt_sha256, image_sha256?, sampling, response_text,
//  latency_ms}
struct TranscriptEntry {
  std::string key;
  std::string model_id;
  std::string prompt_sha256;
  std::optional<std::string> image_sha256;
  SamplingParams sampling;
  std::string response_text;
  long latency_ms = 0;
};

std::vector<TranscriptEntry> load_transcript(const std::filesystem::path& path);

// Appends one JSONL line per recorded call. Shareable across the bindings
// of a run; writes are serialized.
class TranscriptWriter {
 public:
  explicit TranscriptWriter(std::filesystem::path path);

  void append(const BackendRequest& request, const BackendResponse& response);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::mutex mutex_;
};

// Passes through to the inner backend and records every (request, response).
class RecordingBackend : public Backend {
 public:
  RecordingBackend(BackendPtr inner, std::shared_ptr<TranscriptWriter> writer);

  BackendResponse complete(const BackendRequest& request) override;
  bool multimodal() const override { return inner_->multimodal(); }
  std::string name() const override { return inner_->name(); }

 private:
  BackendPtr inner_;
  std::shared_ptr<TranscriptWriter> writer_;
};

// Answers only from a transcript, exact-key matches; never performs a live
// call. Throws ReplayMiss with the offending request key on absence.
class ReplayBackend : public Backend {
 public:
  explicit ReplayBackend(const std::filesystem::path& path,
                         bool multimodal = true);

  BackendResponse complete(const BackendRequest& request) override;
  bool multimodal() const override { return multimodal_; }
  std::string name() const override { return "replay"; }

  size_t size() const { return entries_.size(); }

 private:
  std::map<std::string, TranscriptEntry> entries_;
  bool multimodal_;
};

}  // namespace cantor
