#pragma once

#include <string>
#include <vector>

#include "dpq/core.hpp"

namespace dpq {

// Parses a schema description. One attribute per line, either an explicit
// value list or an inclusive integer range:
//
//   sex: Male, Female
//   age: range 17 90
//
// Blank lines and lines starting with '#' are ignored. Ranges are
// materialized into the full list of integer values as strings.
std::vector<AttributeSpec> parseSchema(const std::string& text);
std::vector<AttributeSpec> loadSchema(const std::string& path);

// Reads delimited text into a dataset under the given schema. Every field
// must belong to the declared domain; violations throw with the line number.
// No header row is expected.
Dataset loadCsv(const std::string& path, std::vector<AttributeSpec> schema, char delim = ',');

// Binary round trip for ingested datasets (msgpack container).
void saveDataset(const Dataset& dataset, const std::string& path);
Dataset loadDataset(const std::string& path);

// Splits one delimited line; no quoting rules, fields are trimmed of
// surrounding whitespace.
std::vector<std::string> splitLine(const std::string& line, char delim);

}  // namespace dpq
