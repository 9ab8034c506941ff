#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "ocd/vocab.hpp"

namespace ocd {

struct DatasetRecord {
  std::string x;
  std::string y;

  bool operator==(const DatasetRecord&) const = default;
};

enum class TaskKind { kCopy, kReverse, kRot, kDedup, kWordReverse };

struct TaskSpec {
  TaskKind kind = TaskKind::kReverse;
  int shift = 1;  // rot only

  /// Accepts copy, reverse, dedup, word_reverse, rot_k (shift 1) and rot_<n>.
  static TaskSpec parse(std::string_view name);
  std::string name() const;
};

struct LengthRange {
  int min = 3;
  int max = 12;
};

/// Deterministic in (task, n, range, vocab, seed); each record draws from its
/// own derived stream. For word_reverse the range bounds each word's length
/// and x holds 2-4 words.
std::vector<DatasetRecord> generate_dataset(const TaskSpec& task, std::size_t n, LengthRange range,
                                            const Vocabulary& vocab, std::uint64_t seed);

/// One JSON object per line: {"x":"...","y":"..."}. Validates every character
/// against `vocab` when given.
std::vector<DatasetRecord> load_dataset(const std::filesystem::path& path, const Vocabulary* vocab = nullptr);
void save_dataset(const std::vector<DatasetRecord>& records, const std::filesystem::path& path);

}  // namespace ocd
