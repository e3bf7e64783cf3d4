#include "cantor/transcript.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "cantor/util/digest.hpp"
#include "cantor/util/fs.hpp"

namespace cantor {

using nlohmann::json;

namespace {

json sampling_json(const SamplingParams& s) {
  json j{{"temperature", s.temperature}, {"max_tokens", s.max_tokens}};
  if (s.seed) j["seed"] = *s.seed;
  return j;
}

SamplingParams sampling_from(const json& j) {
  SamplingParams s;
  s.temperature = j.value("temperature", 0.0);
  s.max_tokens = j.value("max_tokens", 1024);
  if (j.contains("seed") && !j["seed"].is_null()) {
    s.seed = j["seed"].get<std::uint64_t>();
  }
  return s;
}

}  // namespace

std::vector<TranscriptEntry> load_transcript(const std::filesystem::path& path) {
  std::vector<TranscriptEntry> out;
  for (const auto& line : read_lines(path)) {
    json j = json::parse(line);
    TranscriptEntry e;
    e.key = j.at("key").get<std::string>();
    e.model_id = j.value("model_id", "");
    e.prompt_sha256 = j.value("prompt_sha256", "");
    if (j.contains("image_sha256") && !j["image_sha256"].is_null()) {
      e.image_sha256 = j["image_sha256"].get<std::string>();
    }
    e.sampling = sampling_from(j.value("sampling", json::object()));
    e.response_text = j.at("response_text").get<std::string>();
    e.latency_ms = j.value("latency_ms", 0L);
    out.push_back(std::move(e));
  }
  return out;
}

TranscriptWriter::TranscriptWriter(std::filesystem::path path)
    : path_(std::move(path)) {
  if (path_.has_parent_path()) {
    std::filesystem::create_directories(path_.parent_path());
  }
}

void TranscriptWriter::append(const BackendRequest& request,
                              const BackendResponse& response) {
  json j{{"key", request_cache_key(request)},
         {"model_id", request.model_id},
         {"prompt_sha256", sha256_hex(request.text)},
         {"image_sha256",
          request.image ? json(request.image->sha256) : json(nullptr)},
         {"sampling", sampling_json(request.sampling)},
         {"response_text", response.text},
         {"latency_ms", response.latency_ms}};
  std::string line = j.dump() + "\n";
  std::lock_guard lock(mutex_);
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  out.write(line.data(), static_cast<std::streamsize>(line.size()));
}

RecordingBackend::RecordingBackend(BackendPtr inner,
                                   std::shared_ptr<TranscriptWriter> writer)
    : inner_(std::move(inner)), writer_(std::move(writer)) {}

BackendResponse RecordingBackend::complete(const BackendRequest& request) {
  BackendResponse response = inner_->complete(request);
  writer_->append(request, response);
  return response;
}

ReplayBackend::ReplayBackend(const std::filesystem::path& path, bool multimodal)
    : multimodal_(multimodal) {
  for (auto& entry : load_transcript(path)) {
    entries_[entry.key] = std::move(entry);
  }
}

BackendResponse ReplayBackend::complete(const BackendRequest& request) {
  ensure_modality(*this, request);
  std::string key = request_cache_key(request);
  auto it = entries_.find(key);
  if (it == entries_.end()) {
    throw ReplayMiss(key);
  }
  BackendResponse response;
  response.text = it->second.response_text;
  response.latency_ms = it->second.latency_ms;
  response.source = ResponseSource::Replay;
  return response;
}

}  // namespace cantor
