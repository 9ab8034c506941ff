#include "ocd/edit_q.hpp"

namespace ocd {

int edit_distance(std::span<const Token> a, std::span<const Token> b) { return levenshtein(a, b); }

DistanceTable prefix_distance_table(std::span<const Token> hyp, std::span<const Token> ref) {
  DistanceTable table(hyp.size() + 1, ref.size() + 1);
  for (std::size_t j = 0; j <= ref.size(); ++j) table.at(0, j) = static_cast<int>(j);
  for (std::size_t i = 1; i <= hyp.size(); ++i) {
    table.at(i, 0) = static_cast<int>(i);
    for (std::size_t j = 1; j <= ref.size(); ++j) {
      const int sub = table.at(i - 1, j - 1) + (hyp[i - 1] == ref[j - 1] ? 0 : 1);
      table.at(i, j) = std::min({sub, table.at(i - 1, j) + 1, table.at(i, j - 1) + 1});
    }
  }
  return table;
}

std::vector<double> QRow::dense(std::size_t content_size) const {
  std::vector<double> out(content_size + 1, static_cast<double>(-m - 1));
  for (Token t : optimal) out[static_cast<std::size_t>(t)] = -m;
  out[content_size] = -full_distance;
  return out;
}

namespace {

QRow extract_row(std::span<const int> dist, std::span<const Token> ref) {
  QRow row;
  row.m = *std::min_element(dist.begin(), dist.end());
  row.full_distance = dist.back();
  const auto ties = static_cast<std::size_t>(std::count(dist.begin(), dist.end(), row.m));
  row.positions.reserve(ties);
  row.optimal.reserve(ties);
  for (std::size_t j = 0; j < dist.size(); ++j) {
    if (dist[j] != row.m) continue;
    row.positions.push_back(static_cast<int>(j));
    if (j == ref.size()) {
      row.eos = true;
    } else if (std::find(row.optimal.begin(), row.optimal.end(), ref[j]) == row.optimal.end()) {
      row.optimal.push_back(ref[j]);
    }
  }
  return row;
}

}  // namespace

QTable q_values(std::span<const Token> hyp, std::span<const Token> ref) {
  QTable table;
  table.reserve(hyp.size() + 1);

  // dist[j] holds D(hyp[<i], ref[<j]) for the current row i.
  std::vector<int> dist(ref.size() + 1);
  std::iota(dist.begin(), dist.end(), 0);
  table.push_back(extract_row(dist, ref));

  for (std::size_t i = 1; i <= hyp.size(); ++i) {
    const Token h = hyp[i - 1];
    int diag = dist[0];
    dist[0] = static_cast<int>(i);
    for (std::size_t j = 1; j <= ref.size(); ++j) {
      const int up = dist[j];
      dist[j] = std::min({diag + (h == ref[j - 1] ? 0 : 1), up + 1, dist[j - 1] + 1});
      diag = up;
    }
    table.push_back(extract_row(dist, ref));
  }
  return table;
}

std::vector<QTable> q_values_batch(std::span<const std::pair<Sequence, Sequence>> pairs) {
  std::vector<QTable> out(pairs.size());
  std::transform(pairs.begin(), pairs.end(), out.begin(),
                 [](const auto& p) { return q_values(p.first, p.second); });
  return out;
}

}  // namespace ocd
