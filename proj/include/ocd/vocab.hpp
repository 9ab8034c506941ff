#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "ocd/types.hpp"

namespace ocd {

/// Character vocabulary. Content ids are the listed tokens in order, then the
/// space character (if configured); eos and pad follow the content block.
class Vocabulary {
 public:
  explicit Vocabulary(std::vector<std::string> tokens, std::optional<std::string> space = std::nullopt,
                      std::string eos = "</s>", std::string pad = "<pad>");

  /// Sorted distinct characters of `text`; ' ' becomes the space token.
  static Vocabulary from_characters(std::string_view text);
  static Vocabulary from_json(const nlohmann::json& j);
  static Vocabulary load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  std::size_t content_size() const { return symbols_.size(); }
  /// Embedding table size: content + eos + pad.
  std::size_t size() const { return symbols_.size() + 2; }
  Token eos() const { return static_cast<Token>(symbols_.size()); }
  Token pad() const { return eos() + 1; }
  std::optional<Token> space() const { return space_id_; }

  const std::string& symbol(Token t) const;
  /// Throws Error naming the first unknown character.
  Sequence encode(std::string_view text) const;
  std::string decode(std::span<const Token> tokens) const;

 private:
  std::vector<std::string> tokens_;
  std::optional<std::string> space_;
  std::string eos_;
  std::string pad_;
  std::vector<std::string> symbols_;  // content symbols by id
  std::unordered_map<std::string, Token> index_;
  std::optional<Token> space_id_;
};

/// Splits UTF-8 text into code-point strings.
std::vector<std::string> utf8_chars(std::string_view text);

}  // namespace ocd
