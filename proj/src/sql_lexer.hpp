#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace mgate::sql {

enum class TokenKind {
    Word,         // unquoted identifier or keyword
    QuotedIdent,  // "ident" or `ident`
    Number,
    String,       // '...'
    Placeholder,  // <str> / <num> left behind by normalization
    Symbol,       // operators and punctuation
    End,
};

struct Token {
    TokenKind kind = TokenKind::End;
    // Word: lowercased. QuotedIdent: folded to [a-z0-9_]. String: unescaped
    // content. Symbol: the operator text. Number/Placeholder: raw text.
    std::string text;
    std::size_t offset = 0;
    bool unterminated = false;

    bool is_word(std::string_view w) const { return kind == TokenKind::Word && text == w; }
    bool is_symbol(std::string_view s) const { return kind == TokenKind::Symbol && text == s; }
};

// Total over any input: never throws. Comments and whitespace are dropped;
// an unterminated string or quoted identifier runs to the end of input and is
// flagged. The returned vector always ends with a single End token.
std::vector<Token> lex_sql(std::string_view text);

}  // namespace mgate::sql
