#include "ocd/tasks.hpp"

#include <algorithm>
#include <fstream>

#include "ocd/rng.hpp"

namespace ocd {

TaskSpec TaskSpec::parse(std::string_view name) {
  if (name == "copy") return {TaskKind::kCopy};
  if (name == "reverse") return {TaskKind::kReverse};
  if (name == "dedup") return {TaskKind::kDedup};
  if (name == "word_reverse") return {TaskKind::kWordReverse};
  if (name == "rot_k") return {TaskKind::kRot, 1};
  if (name.starts_with("rot_")) {
    const std::string digits(name.substr(4));
    if (!digits.empty() && std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      return {TaskKind::kRot, std::stoi(digits)};
    }
  }
  throw Error("unknown task '" + std::string(name) + "' (expected copy, reverse, rot_k, rot_<n>, dedup, word_reverse)");
}

std::string TaskSpec::name() const {
  switch (kind) {
    case TaskKind::kCopy: return "copy";
    case TaskKind::kReverse: return "reverse";
    case TaskKind::kRot: return "rot_" + std::to_string(shift);
    case TaskKind::kDedup: return "dedup";
    case TaskKind::kWordReverse: return "word_reverse";
  }
  return "?";
}

namespace {

Sequence random_word(Rng& rng, LengthRange range, std::size_t letters) {
  const auto span = static_cast<std::size_t>(range.max - range.min + 1);
  const auto len = static_cast<std::size_t>(range.min) + rng.below(span);
  Sequence w(len);
  for (auto& t : w) t = static_cast<Token>(rng.below(letters));
  return w;
}

}  // namespace

std::vector<DatasetRecord> generate_dataset(const TaskSpec& task, std::size_t n, LengthRange range,
                                            const Vocabulary& vocab, std::uint64_t seed) {
  if (range.min < 1 || range.max < range.min) {
    throw Error("invalid length range [" + std::to_string(range.min) + ", " + std::to_string(range.max) + "]");
  }
  // Letters exclude the space token, which sits last in the content block.
  const std::size_t letters = vocab.content_size() - (vocab.space() ? 1 : 0);
  if (letters == 0) throw Error("vocabulary has no letters besides space");
  if (task.kind == TaskKind::kWordReverse && !vocab.space()) throw Error("word_reverse needs a space token");

  std::vector<DatasetRecord> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, "data", {i}));
    Sequence x;
    Sequence y;
    if (task.kind == TaskKind::kWordReverse) {
      const std::size_t words = 2 + rng.below(3);
      std::vector<Sequence> ws;
      for (std::size_t w = 0; w < words; ++w) ws.push_back(random_word(rng, range, letters));
      auto join = [&](const std::vector<Sequence>& parts) {
        Sequence s;
        for (std::size_t w = 0; w < parts.size(); ++w) {
          if (w) s.push_back(*vocab.space());
          s.insert(s.end(), parts[w].begin(), parts[w].end());
        }
        return s;
      };
      x = join(ws);
      std::reverse(ws.begin(), ws.end());
      y = join(ws);
    } else {
      x = random_word(rng, range, letters);
      switch (task.kind) {
        case TaskKind::kCopy: y = x; break;
        case TaskKind::kReverse: y.assign(x.rbegin(), x.rend()); break;
        case TaskKind::kRot: {
          const auto l = static_cast<long>(letters);
          for (Token t : x) y.push_back(static_cast<Token>(((t + task.shift) % l + l) % l));
          break;
        }
        case TaskKind::kDedup:
          y = x;
          y.erase(std::unique(y.begin(), y.end()), y.end());
          break;
        case TaskKind::kWordReverse: break;
      }
    }
    out.push_back({vocab.decode(x), vocab.decode(y)});
  }
  return out;
}

std::vector<DatasetRecord> load_dataset(const std::filesystem::path& path, const Vocabulary* vocab) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset " + path.string());
  std::vector<DatasetRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    DatasetRecord rec;
    try {
      const auto j = nlohmann::json::parse(line);
      rec.x = j.at("x").get<std::string>();
      rec.y = j.at("y").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw Error("malformed record at " + where + ": " + e.what());
    }
    if (rec.y.empty()) throw Error("empty target at " + where);
    if (vocab) {
      try {
        vocab->encode(rec.x);
        vocab->encode(rec.y);
      } catch (const Error& e) {
        throw Error(std::string(e.what()) + " at " + where);
      }
    }
    out.push_back(std::move(rec));
  }
  return out;
}

void save_dataset(const std::vector<DatasetRecord>& records, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write dataset " + path.string());
  for (const auto& r : records) out << nlohmann::json{{"x", r.x}, {"y", r.y}}.dump() << '\n';
}

}  // namespace ocd
