#include "sql_lexer.hpp"

namespace mgate::sql {
namespace {

// Quoted identifiers may contain anything; fold them into a single lowercase
// word so that re-lexing the normalized stream gives back the same token.
std::string fold_identifier(std::string_view content) {
    std::string out;
    out.reserve(content.size());
    for (char ch : content) {
        const auto c = static_cast<unsigned char>(ch);
        if (c >= 'A' && c <= 'Z') {
            out.push_back(static_cast<char>(c - 'A' + 'a'));
        } else if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c >= 0x80) {
            out.push_back(ch);
        } else {
            out.push_back('_');
        }
    }
    if (out.empty()) out = "_";
    // a leading digit would re-lex as a number
    if (out[0] >= '0' && out[0] <= '9') out.insert(out.begin(), '_');
    return out;
}


bool is_word_byte(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
           (c >= '0' && c <= '9') || c == '_' || c >= 0x80;
}

bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }

bool is_space(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

char ascii_lower(char c) {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

class Lexer {
public:
    explicit Lexer(std::string_view text) : s_(text) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        while (true) {
            skip_trivia();
            if (pos_ >= s_.size()) break;
            out.push_back(next());
        }
        Token end;
        end.kind = TokenKind::End;
        end.offset = s_.size();
        out.push_back(std::move(end));
        return out;
    }

private:
    unsigned char peek(std::size_t ahead = 0) const {
        return pos_ + ahead < s_.size() ? static_cast<unsigned char>(s_[pos_ + ahead]) : 0;
    }

    void skip_trivia() {
        while (pos_ < s_.size()) {
            const unsigned char c = peek();
            if (is_space(c)) {
                ++pos_;
            } else if (c == '-' && peek(1) == '-') {
                while (pos_ < s_.size() && s_[pos_] != '\n') ++pos_;
            } else if (c == '/' && peek(1) == '*') {
                const auto close = s_.find("*/", pos_ + 2);
                pos_ = close == std::string_view::npos ? s_.size() : close + 2;
            } else {
                return;
            }
        }
    }

    Token next() {
        Token tok;
        tok.offset = pos_;
        const unsigned char c = peek();

        if (c == '\'') return quoted(tok, '\'', TokenKind::String);
        if (c == '"' || c == '`') {
            quoted(tok, c, TokenKind::QuotedIdent);
            tok.text = fold_identifier(tok.text);
            return tok;
        }

        if (is_digit(c) || (c == '.' && is_digit(peek(1)))) return number(tok);

        if (is_word_byte(c)) {
            tok.kind = TokenKind::Word;
            while (pos_ < s_.size() && is_word_byte(peek())) {
                tok.text.push_back(ascii_lower(s_[pos_]));
                ++pos_;
            }
            return tok;
        }

        if (c == '<') {
            for (std::string_view ph : {std::string_view("<str>"), std::string_view("<num>")}) {
                if (s_.substr(pos_, ph.size()) == ph) {
                    tok.kind = TokenKind::Placeholder;
                    tok.text = ph;
                    pos_ += ph.size();
                    return tok;
                }
            }
        }

        tok.kind = TokenKind::Symbol;
        static constexpr std::string_view kTwoChar[] = {"<=", ">=", "<>", "!=", "||", "::"};
        for (auto op : kTwoChar) {
            if (s_.substr(pos_, 2) == op) {
                tok.text = op;
                pos_ += 2;
                return tok;
            }
        }
        tok.text = std::string(1, static_cast<char>(c));
        ++pos_;
        return tok;
    }

    Token quoted(Token& tok, char quote, TokenKind kind) {
        tok.kind = kind;
        ++pos_;
        while (true) {
            if (pos_ >= s_.size()) {
                tok.unterminated = true;
                return tok;
            }
            const char c = s_[pos_];
            if (c == quote) {
                if (peek(1) == static_cast<unsigned char>(quote)) {
                    tok.text.push_back(quote);
                    pos_ += 2;
                    continue;
                }
                ++pos_;
                return tok;
            }
            tok.text.push_back(c);
            ++pos_;
        }
    }

    Token number(Token& tok) {
        tok.kind = TokenKind::Number;
        const std::size_t start = pos_;
        while (is_digit(peek())) ++pos_;
        if (peek() == '.' && is_digit(peek(1))) {
            ++pos_;
            while (is_digit(peek())) ++pos_;
        } else if (peek() == '.' && !is_word_byte(peek(1)) && peek(1) != '.') {
            ++pos_;  // "1." is a valid numeric literal
        }
        if ((peek() == 'e' || peek() == 'E') &&
            (is_digit(peek(1)) || ((peek(1) == '+' || peek(1) == '-') && is_digit(peek(2))))) {
            pos_ += 2;
            while (is_digit(peek())) ++pos_;
        }
        tok.text = std::string(s_.substr(start, pos_ - start));
        return tok;
    }

    std::string_view s_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<Token> lex_sql(std::string_view text) { return Lexer(text).run(); }

}  // namespace mgate::sql
