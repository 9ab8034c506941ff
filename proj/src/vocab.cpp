#include "ocd/vocab.hpp"

#include <fstream>
#include <set>

namespace ocd {

std::vector<std::string> utf8_chars(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto lead = static_cast<unsigned char>(text[i]);
    std::size_t len = 1;
    if (lead >= 0xF0) {
      len = 4;
    } else if (lead >= 0xE0) {
      len = 3;
    } else if (lead >= 0xC0) {
      len = 2;
    }
    if (i + len > text.size()) throw Error("truncated UTF-8 sequence");
    out.emplace_back(text.substr(i, len));
    i += len;
  }
  return out;
}

Vocabulary::Vocabulary(std::vector<std::string> tokens, std::optional<std::string> space, std::string eos,
                       std::string pad)
    : tokens_(std::move(tokens)), space_(std::move(space)), eos_(std::move(eos)), pad_(std::move(pad)) {
  if (tokens_.empty() && !space_) throw Error("vocabulary needs at least one content token");
  symbols_ = tokens_;
  if (space_) symbols_.push_back(*space_);
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    const auto& s = symbols_[i];
    if (s == eos_ || s == pad_) throw Error("reserved marker '" + s + "' listed as a token");
    if (utf8_chars(s).size() != 1) throw Error("token '" + s + "' is not a single character");
    if (!index_.emplace(s, static_cast<Token>(i)).second) throw Error("duplicate token '" + s + "'");
  }
  if (space_) space_id_ = static_cast<Token>(symbols_.size() - 1);
}

Vocabulary Vocabulary::from_characters(std::string_view text) {
  std::set<std::string> chars;
  bool has_space = false;
  for (auto& c : utf8_chars(text)) {
    if (c == " ") {
      has_space = true;
    } else {
      chars.insert(std::move(c));
    }
  }
  return Vocabulary({chars.begin(), chars.end()}, has_space ? std::optional<std::string>(" ") : std::nullopt);
}

Vocabulary Vocabulary::from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("tokens")) throw Error("vocabulary JSON needs a \"tokens\" array");
  std::optional<std::string> space;
  if (j.contains("space") && !j["space"].is_null()) space = j["space"].get<std::string>();
  return Vocabulary(j["tokens"].get<std::vector<std::string>>(), space, j.value("eos", "</s>"),
                    j.value("pad", "<pad>"));
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open vocabulary file " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error("bad vocabulary file " + path.string() + ": " + e.what());
  }
}

nlohmann::json Vocabulary::to_json() const {
  nlohmann::json j{{"tokens", tokens_}, {"eos", eos_}, {"pad", pad_}};
  if (space_) j["space"] = *space_;
  return j;
}

const std::string& Vocabulary::symbol(Token t) const {
  if (t == eos() || t == kEos) return eos_;
  if (t == pad()) return pad_;
  if (t < 0 || static_cast<std::size_t>(t) >= symbols_.size()) throw Error("token id out of range: " + std::to_string(t));
  return symbols_[static_cast<std::size_t>(t)];
}

Sequence Vocabulary::encode(std::string_view text) const {
  Sequence out;
  for (const auto& c : utf8_chars(text)) {
    auto it = index_.find(c);
    if (it == index_.end()) throw Error("unknown character '" + c + "'");
    out.push_back(it->second);
  }
  return out;
}

std::string Vocabulary::decode(std::span<const Token> tokens) const {
  std::string out;
  for (Token t : tokens) out += symbol(t);
  return out;
}

}  // namespace ocd
