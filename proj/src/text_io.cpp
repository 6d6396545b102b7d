#include "dpq/text_io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace dpq {

namespace {

std::string trim(const std::string& s) {
  std::size_t begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  std::size_t end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

std::string readFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

std::vector<std::string> splitLine(const std::string& line, char delim) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, delim)) fields.push_back(trim(field));
  if (!line.empty() && line.back() == delim) fields.push_back("");
  return fields;
}

std::vector<AttributeSpec> parseSchema(const std::string& text) {
  std::vector<AttributeSpec> schema;
  std::istringstream in(text);
  std::string line;
  std::size_t lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::size_t colon = t.find(':');
    if (colon == std::string::npos) {
      throw std::runtime_error("schema line " + std::to_string(lineNo) + ": missing ':'");
    }
    AttributeSpec attr;
    attr.name = trim(t.substr(0, colon));
    if (attr.name.empty()) {
      throw std::runtime_error("schema line " + std::to_string(lineNo) + ": empty name");
    }
    std::string rest = trim(t.substr(colon + 1));
    if (rest.rfind("range ", 0) == 0) {
      std::istringstream args(rest.substr(6));
      long long lo = 0, hi = 0;
      if (!(args >> lo >> hi) || lo > hi) {
        throw std::runtime_error("schema line " + std::to_string(lineNo) + ": bad range");
      }
      if (hi - lo + 1 > static_cast<long long>(kMaxBins)) {
        throw std::runtime_error("schema line " + std::to_string(lineNo) + ": range too large");
      }
      for (long long v = lo; v <= hi; ++v) attr.domain.push_back(std::to_string(v));
    } else {
      attr.domain = splitLine(rest, ',');
    }
    if (attr.domain.empty()) {
      throw std::runtime_error("schema line " + std::to_string(lineNo) + ": empty domain");
    }
    for (const auto& existing : schema) {
      if (existing.name == attr.name) {
        throw std::runtime_error("schema line " + std::to_string(lineNo) +
                                 ": duplicate attribute '" + attr.name + "'");
      }
    }
    schema.push_back(std::move(attr));
  }
  if (schema.empty()) throw std::runtime_error("schema has no attributes");
  return schema;
}

std::vector<AttributeSpec> loadSchema(const std::string& path) {
  return parseSchema(readFile(path));
}

Dataset loadCsv(const std::string& path, std::vector<AttributeSpec> schema, char delim) {
  Dataset dataset;
  dataset.schema = std::move(schema);
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::string line;
  std::size_t lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    std::string t = trim(line);
    if (t.empty()) continue;
    try {
      dataset.addRow(splitLine(t, delim));
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineNo) + ": " + e.what());
    }
  }
  return dataset;
}

void saveDataset(const Dataset& dataset, const std::string& path) {
  nlohmann::json j;
  j["schema"] = nlohmann::json::array();
  for (const auto& attr : dataset.schema) {
    j["schema"].push_back({{"name", attr.name}, {"domain", attr.domain}});
  }
  j["rows"] = dataset.rows;
  std::vector<std::uint8_t> bytes = nlohmann::json::to_msgpack(j);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

Dataset loadDataset(const std::string& path) {
  std::string bytes = readFile(path);
  nlohmann::json j = nlohmann::json::from_msgpack(bytes.begin(), bytes.end());
  Dataset dataset;
  for (const auto& a : j.at("schema")) {
    AttributeSpec attr;
    attr.name = a.at("name").get<std::string>();
    attr.domain = a.at("domain").get<std::vector<std::string>>();
    dataset.schema.push_back(std::move(attr));
  }
  dataset.rows = j.at("rows").get<std::vector<std::vector<std::uint32_t>>>();
  for (const auto& row : dataset.rows) {
    if (row.size() != dataset.schema.size()) {
      throw std::runtime_error("dataset row arity mismatch in '" + path + "'");
    }
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (row[i] >= dataset.schema[i].domain.size()) {
        throw std::runtime_error("dataset value out of domain in '" + path + "'");
      }
    }
  }
  return dataset;
}

}  // namespace dpq
