#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "iftkit/corpus/record.hpp"

namespace iftkit::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "iftkit") {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            (tag + "-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream(path, std::ios::binary) << text;
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::string fixture(const std::string& name) {
  return std::string(IFTKIT_FIXTURE_DIR) + "/" + name;
}

// Word drawn from a small fixed vocabulary.
inline std::string vocab_word(std::mt19937_64& rng, int vocab = 200) {
  return "w" + std::to_string(std::uniform_int_distribution<int>(0, vocab - 1)(rng));
}

inline std::string random_sentence(std::mt19937_64& rng, int words, int vocab = 200) {
  std::string s;
  for (int i = 0; i < words; ++i) {
    if (i) s += ' ';
    s += vocab_word(rng, vocab);
  }
  return s;
}

// Records with annotated response_tokens drawn from [lo, hi]; ids are
// positional. Small ranges force many ties.
inline corpus::Records random_annotated(std::mt19937_64& rng, std::size_t n, std::int64_t lo,
                                        std::int64_t hi) {
  corpus::Records out;
  std::uniform_int_distribution<std::int64_t> len(lo, hi);
  for (std::size_t i = 0; i < n; ++i) {
    corpus::InstructionRecord r;
    r.id = corpus::positional_id(i);
    r.instruction = "instruction " + std::to_string(i);
    r.output = "output " + std::to_string(i);
    r.response_tokens = len(rng);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace iftkit::testing
