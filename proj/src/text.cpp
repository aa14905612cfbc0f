#include "stylo/text.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace stylo {

const std::vector<std::string>& punctuation_marks() {
  static const std::vector<std::string> marks = {
      ".", ",", "!", "?", ";", ":", "'", "(", ")", "-", "..."};
  return marks;
}

bool is_punct_token(const std::string& token) {
  const auto& marks = punctuation_marks();
  return std::find(marks.begin(), marks.end(), token) != marks.end();
}

std::string ascii_reduce(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  size_t i = 0;
  while (i < text.size()) {
    unsigned char c = static_cast<unsigned char>(text[i]);
    if (c < 0x80) {
      out.push_back(static_cast<char>(c));
      ++i;
      continue;
    }
    // decode one UTF-8 code point
    unsigned cp = 0;
    size_t len = 1;
    if ((c & 0xE0) == 0xC0 && i + 1 < text.size()) {
      cp = (c & 0x1F) << 6 | (text[i + 1] & 0x3F);
      len = 2;
    } else if ((c & 0xF0) == 0xE0 && i + 2 < text.size()) {
      cp = (c & 0x0F) << 12 | (text[i + 1] & 0x3F) << 6 | (text[i + 2] & 0x3F);
      len = 3;
    } else if ((c & 0xF8) == 0xF0 && i + 3 < text.size()) {
      cp = (c & 0x07) << 18 | (text[i + 1] & 0x3F) << 12 |
           (text[i + 2] & 0x3F) << 6 | (text[i + 3] & 0x3F);
      len = 4;
    }
    switch (cp) {
      case 0x2018:  // left single quote
      case 0x2019:  // right single quote
      case 0x201A:
      case 0x2032:
        out.push_back('\'');
        break;
      case 0x201C:  // left double quote
      case 0x201D:  // right double quote
      case 0x201E:
        out.push_back('"');
        break;
      case 0x2010:  // hyphen
      case 0x2011:
      case 0x2012:
      case 0x2013:  // en dash
      case 0x2014:  // em dash
      case 0x2015:
        out.push_back('-');
        break;
      case 0x2026:  // ellipsis
        out += "...";
        break;
      case 0x00A0:  // no-break space
        out.push_back(' ');
        break;
      default:
        out.append(text, i, len);
    }
    i += len;
  }
  return out;
}

std::vector<std::string> whitespace_tokens(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

bool ends_sentence(const std::string& ws_token) {
  size_t end = ws_token.size();
  while (end > 0) {
    char c = ws_token[end - 1];
    if (c == '\'' || c == '"' || c == '`' || c == ')') {
      --end;
    } else {
      break;
    }
  }
  if (end == 0) return false;
  char c = ws_token[end - 1];
  return c == '.' || c == '!' || c == '?';
}

std::string to_lower(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

namespace {

bool is_split_punct(char c) {
  switch (c) {
    case '.':
    case ',':
    case '!':
    case '?':
    case ';':
    case ':':
    case '\'':
    case '(':
    case ')':
    case '-':
      return true;
    default:
      return false;
  }
}

}  // namespace

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string word;
  auto flush = [&] {
    if (!word.empty()) {
      out.push_back(to_lower(word));
      word.clear();
    }
  };
  size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      flush();
      ++i;
    } else if (c == '.') {
      flush();
      size_t run = 0;
      while (i + run < text.size() && text[i + run] == '.') ++run;
      out.push_back(run >= 2 ? "..." : ".");
      i += run;
    } else if (is_split_punct(c)) {
      flush();
      out.push_back(std::string(1, c));
      ++i;
    } else {
      word.push_back(c);
      ++i;
    }
  }
  flush();
  return out;
}

std::string detokenize(const std::vector<std::string>& tokens) {
  std::string out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

}  // namespace stylo
