#include "metric_gate/sql_frontend.hpp"

#include "sql_lexer.hpp"

namespace mgate {

std::string NormalizedTokens::detokenized() const {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out.push_back(' ');
        out += tokens[i];
    }
    return out;
}

NormalizedTokens normalize_query(std::string_view query_text) {
    NormalizedTokens result;
    for (const auto& tok : sql::lex_sql(query_text)) {
        switch (tok.kind) {
        case sql::TokenKind::Word:
        case sql::TokenKind::Placeholder:
        case sql::TokenKind::Symbol:
        case sql::TokenKind::QuotedIdent:
            result.tokens.push_back(tok.text);
            break;
        case sql::TokenKind::Number:
            result.tokens.emplace_back(kNumberPlaceholder);
            break;
        case sql::TokenKind::String:
            result.tokens.emplace_back(kStringPlaceholder);
            break;
        case sql::TokenKind::End:
            break;
        }
    }
    return result;
}

}  // namespace mgate
