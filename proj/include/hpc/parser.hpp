#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "hpc/syntax.hpp"

namespace hpc {

struct ParseError : std::runtime_error {
    int line = 0, col = 0;
    ParseError(int l, int c, const std::string& msg);
};

struct Definition {
    std::string name;
    std::vector<Name> params;
    Proc body;  // already inlined
};

struct ModelFile {
    std::map<std::string, double> constants;
    std::vector<Definition> definitions;
    Proc entry;
};

// Either a full model file (const/def/run sections) or a bare process term.
ModelFile parse_model(const std::string& text);
Proc parse_process(const std::string& text);

// Round-trips through parse_model up to alpha-equivalence.
std::string pretty(const Proc& p);
std::string pretty_expr(const Expr& e);
std::string pretty_bool(const Bool& b);

// Names appear by display text only.
nlohmann::json expr_json(const Expr& e);
nlohmann::json ast_json(const Proc& p);
nlohmann::json ast_json(const ModelFile& m);

}  // namespace hpc
