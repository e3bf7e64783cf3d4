#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cantor/domain.hpp"

namespace cantor {

struct ImportResult {
  std::vector<QueryRecord> records;
  std::vector<std::string> warnings;  // e.g. missing image files
};

// Imports the upstream ScienceQA problems.json layout
// (id -> {question, choices, answer, hint, image, subject, grade, split}).
// Tags: subject NAT/SOC/LAN; context TXT (hint non-empty) and/or IMG
// (image attached), NO when neither; grade band G1-6 / G7-12. A declared
// image whose file is missing keeps the record with visual=none plus an
// "image_missing" flag and a warning.
ImportResult import_scienceqa(const std::filesystem::path& problems_json,
                              const std::string& split,
                              const std::filesystem::path& image_root);

// Imports the upstream MathVista testmini layout. Choice items become
// choice records; free-form golds are numbers when the answer parses as
// one, text otherwise. Tags carry the task code (FQA/GPS/MWP/TQA/VQA) and
// reasoning-skill codes (ALG/ARI/GEO/LOG/NUM/SCI/STA).
ImportResult import_mathvista(const std::filesystem::path& testmini_json,
                              const std::filesystem::path& image_root);

// Canonical JSONL: one record per line. Loading validates every record
// (including id uniqueness) and fails listing all violations.
std::vector<QueryRecord> load_canonical(const std::filesystem::path& path);
void save_canonical(const std::filesystem::path& path,
                    const std::vector<QueryRecord>& records);

}  // namespace cantor
