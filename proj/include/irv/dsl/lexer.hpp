#pragma once

#include <cctype>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace irv::dsl {

class SyntaxError : public std::runtime_error {
 public:
  SyntaxError(int line, int column, const std::string& msg)
      : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + msg),
        line_(line),
        column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

struct Token {
  enum Kind { Ident, Int, String, Punct, Newline, End } kind = End;
  std::string text;
  long long value = 0;
  int line = 1;
  int col = 1;

  bool is(Kind k, std::string_view t) const { return kind == k && text == t; }
  bool punct(std::string_view t) const { return is(Punct, t); }
  bool ident(std::string_view t) const { return is(Ident, t); }
};

inline std::string describe(const Token& t) {
  switch (t.kind) {
    case Token::Newline: return "end of line";
    case Token::End: return "end of input";
    case Token::String: return "string \"" + t.text + "\"";
    default: return "'" + t.text + "'";
  }
}

/// Tokens with newlines kept; '#' starts a comment.
inline std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  int line = 1, col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++i;
    }
  };
  while (i < src.size()) {
    char c = src[i];
    Token t;
    t.line = line;
    t.col = col;
    if (c == '\n') {
      t.kind = Token::Newline;
      t.text = "\n";
      out.push_back(t);
      advance(1);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    if (c == '#') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
      t.kind = Token::Ident;
      t.text = std::string(src.substr(i, j - i));
      out.push_back(t);
      advance(j - i);
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      if (j < src.size() && (std::isalpha(static_cast<unsigned char>(src[j])) || src[j] == '_'))
        throw SyntaxError(line, col, "malformed number");
      t.kind = Token::Int;
      t.text = std::string(src.substr(i, j - i));
      try {
        t.value = std::stoll(t.text);
      } catch (const std::out_of_range&) {
        throw SyntaxError(line, col, "number out of range");
      }
      out.push_back(t);
      advance(j - i);
      continue;
    }
    if (c == '"') {
      std::size_t j = i + 1;
      std::string s;
      while (j < src.size() && src[j] != '"' && src[j] != '\n') {
        if (src[j] == '\\' && j + 1 < src.size()) {
          char e = src[j + 1];
          s += e == 'n' ? '\n' : e == 't' ? '\t' : e;
          j += 2;
        } else {
          s += src[j++];
        }
      }
      if (j >= src.size() || src[j] != '"') throw SyntaxError(line, col, "unterminated string");
      t.kind = Token::String;
      t.text = s;
      out.push_back(t);
      advance(j + 1 - i);
      continue;
    }
    static const char* two[] = {":=", "==", "!=", "<=", ">=", "->"};
    t.kind = Token::Punct;
    t.text = std::string(1, c);
    for (const char* p : two)
      if (src.substr(i, 2) == p) t.text = p;
    if (t.text.size() == 1 && std::string_view("{}()[],:;=<>+-*@&").find(c) == std::string_view::npos)
      throw SyntaxError(line, col, std::string("unexpected character '") + c + "'");
    out.push_back(t);
    advance(t.text.size());
  }
  Token end;
  end.kind = Token::End;
  end.line = line;
  end.col = col;
  out.push_back(end);
  return out;
}

/// Rewrites the colon-and-indent block form into the brace form, keeping
/// line numbers and the columns of the original text.
///
///   state s accepting:         ->  state s accepting {
///     transition:              ->    transition {
///   initialization: {...}      ->  initialization {...}
inline std::string desugar_indentation(std::string_view src) {
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos <= src.size()) {
    std::size_t nl = src.find('\n', pos);
    if (nl == std::string_view::npos) nl = src.size();
    lines.emplace_back(src.substr(pos, nl - pos));
    pos = nl + 1;
  }
  auto indent_of = [](const std::string& l) {
    int n = 0;
    for (char c : l) {
      if (c == ' ') n += 1;
      else if (c == '\t') n += 8 - n % 8;
      else break;
    }
    return n;
  };
  auto code_part = [](const std::string& l) {
    bool in_str = false;
    for (std::size_t k = 0; k < l.size(); ++k) {
      if (l[k] == '"') in_str = !in_str;
      if (l[k] == '#' && !in_str) return l.substr(0, k);
    }
    return l;
  };
  auto rtrim = [](std::string s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
    return s;
  };
  auto first_word = [](const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return std::string();
    std::size_t e = b;
    while (e < s.size() && (std::isalnum(static_cast<unsigned char>(s[e])) || s[e] == '_')) ++e;
    return s.substr(b, e - b);
  };

  std::vector<int> open;  // indents of sugar blocks still open
  int last_nonblank = -1;
  for (std::size_t k = 0; k < lines.size(); ++k) {
    std::string code = rtrim(code_part(lines[k]));
    if (code.find_first_not_of(" \t") == std::string::npos) continue;
    int ind = indent_of(lines[k]);
    while (!open.empty() && ind <= open.back()) {
      lines[last_nonblank] += " }";
      open.pop_back();
    }
    std::string w = first_word(code);
    if ((w == "state" || w == "transition") && code.back() == ':') {
      std::string comment = lines[k].substr(code.size());
      lines[k] = code.substr(0, code.size() - 1) + " {" + comment;
      open.push_back(ind);
    } else if (w == "initialization") {
      std::size_t at = code.find("initialization") + std::string("initialization").size();
      std::size_t colon = code.find_first_not_of(" \t", at);
      if (colon != std::string::npos && code[colon] == ':') lines[k][colon] = ' ';
    }
    last_nonblank = static_cast<int>(k);
  }
  while (!open.empty() && last_nonblank >= 0) {
    lines[last_nonblank] += " }";
    open.pop_back();
  }
  std::string out;
  for (std::size_t k = 0; k < lines.size(); ++k) out += lines[k] + (k + 1 < lines.size() ? "\n" : "");
  return out;
}

}  // namespace irv::dsl
