#include "cantor/datasets.hpp"

#include <cstdlib>
#include <set>

#include <nlohmann/json.hpp>

#include "cantor/errors.hpp"
#include "cantor/util/digest.hpp"
#include "cantor/util/fs.hpp"
#include "cantor/util/text.hpp"

namespace cantor {

using nlohmann::json;

namespace {

std::string media_type_for(const std::filesystem::path& path) {
  std::string ext = to_lower(path.extension().string());
  if (ext == ".png") return "image/png";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".gif") return "image/gif";
  if (ext == ".webp") return "image/webp";
  return "application/octet-stream";
}

std::string subject_code(const std::string& subject, const std::string& id) {
  std::string key = squash_alnum(subject);
  if (key == "naturalscience" || key == "nat") return "NAT";
  if (key == "socialscience" || key == "soc") return "SOC";
  if (key == "languagescience" || key == "lan") return "LAN";
  throw DataError("source_schema",
                  "record " + id + ": unknown subject '" + subject + "'");
}

std::string grade_band(const std::string& grade, const std::string& id) {
  std::string digits;
  for (char c : grade) {
    if (std::isdigit(static_cast<unsigned char>(c))) digits.push_back(c);
  }
  if (digits.empty()) {
    throw DataError("source_schema",
                    "record " + id + ": unparseable grade '" + grade + "'");
  }
  int g = std::atoi(digits.c_str());
  return g <= 6 ? "G1-6" : "G7-12";
}

std::string task_code(const std::string& task) {
  std::string key = squash_alnum(task);
  if (key == "figurequestionanswering" || key == "fqa") return "FQA";
  if (key == "geometryproblemsolving" || key == "gps") return "GPS";
  if (key == "mathwordproblem" || key == "mwp") return "MWP";
  if (key == "textbookquestionanswering" || key == "tqa") return "TQA";
  if (key == "visualquestionanswering" || key == "vqa") return "VQA";
  return trim(task);  // open taxonomy: keep unrecognized values as-is
}

std::string skill_code(const std::string& skill) {
  std::string key = squash_alnum(skill);
  if (key == "algebraicreasoning" || key == "alg") return "ALG";
  if (key == "arithmeticreasoning" || key == "ari") return "ARI";
  if (key == "geometryreasoning" || key == "geo") return "GEO";
  if (key == "logicalreasoning" || key == "log") return "LOG";
  if (key == "numericcommonsense" || key == "num") return "NUM";
  if (key == "scientificreasoning" || key == "sci") return "SCI";
  if (key == "statisticalreasoning" || key == "sta") return "STA";
  return trim(skill);
}

// Parses a full-string numeric answer; scientific notation accepted.
std::optional<double> parse_full_number(const std::string& s) {
  std::string t = trim(s);
  if (t.empty()) return std::nullopt;
  char* end = nullptr;
  double value = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size()) return std::nullopt;
  return value;
}

json parse_source(const std::filesystem::path& path) {
  json j = json::parse(read_file(path), nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) {
    throw DataError("source_schema", "unparseable JSON: " + path.string());
  }
  return j;
}

}  // namespace

ImportResult import_scienceqa(const std::filesystem::path& problems_json,
                              const std::string& split,
                              const std::filesystem::path& image_root) {
  json problems = parse_source(problems_json);
  if (!problems.is_object()) {
    throw DataError("source_schema",
                    "problems file must be an object keyed by id");
  }

  ImportResult result;
  for (const auto& [id, item] : problems.items()) {
    if (!item.is_object()) {
      throw DataError("source_schema", "record " + id + ": not an object");
    }
    if (item.value("split", "") != split) continue;

    QueryRecord record;
    record.id = id;
    record.split = split;
    record.question = item.value("question", "");
    record.context = item.value("hint", "");
    record.options = item.value("choices", std::vector<std::string>{});
    if (record.options.empty()) {
      throw DataError("source_schema", "record " + id + ": no choices");
    }
    if (!item.contains("answer") || !item["answer"].is_number_integer()) {
      throw DataError("source_schema", "record " + id + ": missing answer index");
    }
    record.gold = GoldAnswer::choice(item["answer"].get<int>());

    bool has_image_field =
        item.contains("image") && item["image"].is_string() &&
        !item["image"].get<std::string>().empty();
    if (has_image_field) {
      std::filesystem::path path =
          image_root / id / item["image"].get<std::string>();
      if (std::filesystem::is_regular_file(path)) {
        ImageRef ref;
        ref.path = path.string();
        ref.media_type = media_type_for(path);
        ref.sha256 = sha256_file(path);
        record.visual = VisualInput::with_image(std::move(ref));
      } else {
        result.warnings.push_back("record " + id + ": image file missing: " +
                                  path.string());
        record.categories["flags"].push_back("image_missing");
      }
    }

    record.categories["subject"] = {
        subject_code(item.value("subject", ""), id)};
    record.categories["grade"] = {grade_band(item.value("grade", ""), id)};
    std::vector<std::string> context_flags;
    if (!record.context.empty()) context_flags.push_back("TXT");
    if (has_image_field) context_flags.push_back("IMG");
    if (context_flags.empty()) context_flags.push_back("NO");
    record.categories["context"] = std::move(context_flags);

    result.records.push_back(std::move(record));
  }
  return result;
}

ImportResult import_mathvista(const std::filesystem::path& testmini_json,
                              const std::filesystem::path& image_root) {
  json source = parse_source(testmini_json);

  // The upstream file ships either as a pid-keyed object or a list.
  std::vector<json> items;
  if (source.is_object()) {
    for (const auto& [key, item] : source.items()) {
      json copy = item;
      if (!copy.contains("pid")) copy["pid"] = key;
      items.push_back(std::move(copy));
    }
  } else if (source.is_array()) {
    items.assign(source.begin(), source.end());
  } else {
    throw DataError("source_schema", "testmini file must be an object or array");
  }

  ImportResult result;
  for (const auto& item : items) {
    std::string pid = item.contains("pid") && item["pid"].is_string()
                          ? item["pid"].get<std::string>()
                          : std::to_string(item.value("pid", 0));
    QueryRecord record;
    record.id = pid;
    record.split = "testmini";
    record.question = item.value("question", "");
    std::string answer = item.contains("answer") && item["answer"].is_string()
                             ? item["answer"].get<std::string>()
                             : item.value("answer", json()).dump();

    bool is_choice = item.contains("choices") && item["choices"].is_array() &&
                     !item["choices"].empty();
    if (is_choice) {
      record.options = item["choices"].get<std::vector<std::string>>();
      int index = -1;
      for (size_t i = 0; i < record.options.size(); ++i) {
        if (record.options[i] == answer) {
          index = static_cast<int>(i);
          break;
        }
      }
      if (index < 0) {
        throw DataError("source_schema", "record " + pid +
                                             ": answer does not match any choice");
      }
      record.gold = GoldAnswer::choice(index);
    } else if (auto number = parse_full_number(answer)) {
      std::optional<double> tol;
      if (item.contains("precision") && item["precision"].is_number()) {
        tol = 0.5 * std::pow(10.0, -item["precision"].get<double>());
      }
      record.gold = GoldAnswer::free_number(*number, tol);
    } else {
      record.gold = GoldAnswer::free_text(answer);
    }

    if (item.contains("image") && item["image"].is_string() &&
        !item["image"].get<std::string>().empty()) {
      std::filesystem::path path = image_root / item["image"].get<std::string>();
      if (std::filesystem::is_regular_file(path)) {
        ImageRef ref;
        ref.path = path.string();
        ref.media_type = media_type_for(path);
        ref.sha256 = sha256_file(path);
        record.visual = VisualInput::with_image(std::move(ref));
      } else {
        result.warnings.push_back("record " + pid + ": image file missing: " +
                                  path.string());
        record.categories["flags"].push_back("image_missing");
      }
    }

    const json metadata = item.value("metadata", json::object());
    if (metadata.contains("task")) {
      record.categories["task"] = {
          task_code(metadata["task"].get<std::string>())};
    }
    if (metadata.contains("skills") && metadata["skills"].is_array()) {
      std::vector<std::string> skills;
      for (const auto& skill : metadata["skills"]) {
        skills.push_back(skill_code(skill.get<std::string>()));
      }
      record.categories["skill"] = std::move(skills);
    }

    result.records.push_back(std::move(record));
  }
  return result;
}

std::vector<QueryRecord> load_canonical(const std::filesystem::path& path) {
  std::vector<QueryRecord> records;
  std::vector<std::string> problems;
  std::set<std::string> seen_ids;

  size_t line_no = 0;
  for (const auto& line : read_lines(path)) {
    ++line_no;
    json j = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded()) {
      problems.push_back("line " + std::to_string(line_no) + ": unparseable JSON");
      continue;
    }
    QueryRecord record;
    try {
      record = record_from_json(j);
    } catch (const std::exception& err) {
      problems.push_back("line " + std::to_string(line_no) + ": " + err.what());
      continue;
    }
    for (const auto& violation : validate_query(record)) {
      problems.push_back("record " + record.id + ": " + violation.field + ": " +
                         violation.rule);
    }
    if (!seen_ids.insert(record.id).second) {
      problems.push_back("record " + record.id + ": id: duplicate id");
    }
    records.push_back(std::move(record));
  }

  if (!problems.empty()) {
    std::string message = "canonical load failed with " +
                          std::to_string(problems.size()) + " violation(s):";
    for (const auto& p : problems) message += "\n  " + p;
    throw DataError("validation_failed", message);
  }
  return records;
}

void save_canonical(const std::filesystem::path& path,
                    const std::vector<QueryRecord>& records) {
  std::string out;
  for (const auto& record : records) {
    out += to_json(record).dump();
    out += '\n';
  }
  write_file(path, out);
}

}  // namespace cantor
