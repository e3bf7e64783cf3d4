#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "cantor/util/fs.hpp"

namespace cantor::test {

// Fabricates an upstream-shaped ScienceQA problems.json plus image files:
// `total` test-split items, the first `with_images` of which carry images,
// plus a few train items that the importer must skip.
struct ScienceQAUpstream {
  std::filesystem::path problems_json;
  std::filesystem::path image_root;
};

inline ScienceQAUpstream write_scienceqa_upstream(
    const std::filesystem::path& dir, int total, int with_images) {
  nlohmann::json problems = nlohmann::json::object();
  const char* subjects[] = {"natural science", "social science",
                            "language science"};
  std::filesystem::path image_root = dir / "images";

  for (int i = 0; i < total; ++i) {
    std::string id = std::to_string(i + 1);
    nlohmann::json item;
    item["question"] = "Synthetic question " + id + "?";
    item["choices"] = {"choice a " + id, "choice b " + id, "choice c " + id};
    item["answer"] = i % 3;
    item["hint"] = (i % 2 == 0) ? "A helpful hint for " + id : "";
    item["subject"] = subjects[i % 3];
    item["grade"] = "grade" + std::to_string(1 + i % 12);
    item["split"] = "test";
    if (i < with_images) {
      item["image"] = "image.png";
      std::filesystem::path path = image_root / id / "image.png";
      std::filesystem::create_directories(path.parent_path());
      std::ofstream out(path, std::ios::binary);
      out << "png-bytes-" << id;
    } else {
      item["image"] = nullptr;
    }
    problems[id] = std::move(item);
  }
  // Items from other splits must be ignored by the importer.
  for (int i = 0; i < 5; ++i) {
    std::string id = "train-" + std::to_string(i);
    problems[id] = {{"question", "Train question?"},
                    {"choices", {"x", "y"}},
                    {"answer", 0},
                    {"hint", ""},
                    {"subject", "natural science"},
                    {"grade", "grade3"},
                    {"split", "train"},
                    {"image", nullptr}};
  }

  ScienceQAUpstream upstream;
  upstream.problems_json = dir / "problems.json";
  upstream.image_root = image_root;
  write_file(upstream.problems_json, problems.dump());
  return upstream;
}

struct MathVistaUpstream {
  std::filesystem::path testmini_json;
  std::filesystem::path image_root;
};

inline MathVistaUpstream write_mathvista_upstream(
    const std::filesystem::path& dir, int total) {
  nlohmann::json testmini = nlohmann::json::object();
  const char* tasks[] = {"figure question answering", "geometry problem solving",
                         "math word problem", "textbook question answering",
                         "visual question answering"};
  const char* skills[] = {"algebraic reasoning", "arithmetic reasoning",
                          "geometry reasoning", "logical reasoning",
                          "numeric commonsense", "scientific reasoning",
                          "statistical reasoning"};
  std::filesystem::path image_root = dir / "mv_images";
  std::filesystem::create_directories(image_root / "images");

  for (int i = 0; i < total; ++i) {
    std::string pid = std::to_string(i + 1);
    nlohmann::json item;
    item["pid"] = pid;
    item["question"] = "MathVista question " + pid + "?";
    item["image"] = "images/" + pid + ".jpg";
    {
      std::ofstream out(image_root / "images" / (pid + ".jpg"),
                        std::ios::binary);
      out << "jpg-bytes-" << pid;
    }
    if (i % 5 < 2) {
      item["question_type"] = "multi_choice";
      item["choices"] = {"first " + pid, "second " + pid, "third " + pid};
      item["answer"] = "second " + pid;
    } else if (i % 5 < 4) {
      item["question_type"] = "free_form";
      item["choices"] = nullptr;
      item["answer"] = std::to_string(i % 97);
      item["answer_type"] = "integer";
    } else {
      item["question_type"] = "free_form";
      item["choices"] = nullptr;
      item["answer"] = (i % 2) ? "red" : "triangle";
      item["answer_type"] = "text";
    }
    item["metadata"] = {{"task", tasks[i % 5]},
                        {"skills", {skills[i % 7], skills[(i + 3) % 7]}}};
    testmini[pid] = std::move(item);
  }

  MathVistaUpstream upstream;
  upstream.testmini_json = dir / "testmini.json";
  upstream.image_root = image_root;
  write_file(upstream.testmini_json, testmini.dump());
  return upstream;
}

}  // namespace cantor::test
