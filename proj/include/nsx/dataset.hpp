#pragma once

#include <string>
#include <vector>

#include "nsx/value.hpp"

namespace nsx {

// Numeric table of sampled executions. String inputs have already been
// lowered to length columns by the sampler; kinds are Int or Real only.
struct Dataset {
    struct Column {
        std::string name;
        Kind kind = Kind::Int;
    };

    std::vector<Column> columns;
    std::vector<std::vector<double>> rows;

    int column_index(const std::string& name) const;

    // Throws FileFormatError if a row has the wrong arity or a non-finite
    // value.
    void validate() const;
};

// CSV with a `name:kind` header row, e.g. "a:int,b:int,cnt:int,c:int,d:int".
Dataset load_csv(const std::string& path);
void save_csv(const Dataset& d, const std::string& path);

} // namespace nsx
