#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dpq/core.hpp"
#include "dpq/harness.hpp"
#include "dpq/text_io.hpp"

namespace {

nlohmann::json readJson(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return nlohmann::json::parse(in);
}

void writeText(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-analyst private histogram query engine"};
  app.require_subcommand(1);

  std::string csvPath;
  std::string schemaPath;
  std::string datasetOut;
  std::string delim = ",";
  auto* ingest = app.add_subcommand("ingest", "Encode delimited rows against a schema");
  ingest->add_option("--csv", csvPath, "input rows, one record per line, no header")->required();
  ingest->add_option("--schema", schemaPath, "attribute schema file")->required();
  ingest->add_option("--out", datasetOut, "encoded dataset destination")->required();
  ingest->add_option("--delim", delim, "field separator, one character")
      ->check(CLI::Validator(
          [](std::string& value) {
            return value.size() == 1 ? std::string{} : std::string{"must be one character"};
          },
          "CHAR"));
  ingest->callback([&] {
    dpq::Dataset dataset = dpq::loadCsv(csvPath, dpq::loadSchema(schemaPath), delim[0]);
    dpq::saveDataset(dataset, datasetOut);
    std::cout << "rows=" << dataset.rows.size() << " attributes=" << dataset.schema.size()
              << " -> " << datasetOut << '\n';
  });

  std::string dataPath;
  std::string viewsOut;
  std::vector<std::string> groups;
  auto* buildViews = app.add_subcommand("build-views", "Declare histogram views over a dataset");
  buildViews->add_option("--data", dataPath, "encoded dataset")->required();
  buildViews->add_option("--out", viewsOut, "view declaration destination (JSON)")->required();
  buildViews->add_option("--group", groups,
                         "comma-joined attribute group, repeatable; "
                         "default is one view per attribute");
  buildViews->callback([&] {
    dpq::Dataset dataset = dpq::loadDataset(dataPath);
    nlohmann::json views = nlohmann::json::array();
    auto declare = [&](const std::vector<std::string>& attrs) {
      dpq::HistogramView view = dpq::buildView(dataset, attrs);
      views.push_back(
          {{"id", view.id}, {"attributes", view.attributes}, {"bins", view.binCount()}});
    };
    if (groups.empty()) {
      for (const auto& attr : dataset.schema) declare({attr.name});
    } else {
      for (const auto& group : groups) declare(dpq::splitLine(group, ','));
    }
    writeText(viewsOut, views.dump(2) + "\n");
    std::cout << views.size() << " views -> " << viewsOut << '\n';
  });

  std::string specPath;
  std::string outDir;
  auto* run = app.add_subcommand("run", "Run the experiment grid described by a spec");
  run->add_option("--spec", specPath, "experiment spec (JSON, see README)")->required();
  run->add_option("--out-dir", outDir, "override the spec's output directory");
  run->callback([&] {
    nlohmann::json spec = readJson(specPath);
    if (!outDir.empty()) spec["outputDir"] = outDir;
    auto cells = dpq::runExperiment(spec);
    std::cout << dpq::summaryCsv(cells);
  });

  std::string cellsPath;
  std::string aggregateOut;
  auto* report = app.add_subcommand("report", "Aggregate a grid's report.json across seeds");
  report->add_option("--cells", cellsPath, "report.json produced by run")->required();
  report->add_option("--out", aggregateOut, "write the aggregate CSV here instead of stdout");
  report->callback([&] {
    std::string csv = dpq::aggregateCsv(readJson(cellsPath));
    if (aggregateOut.empty()) {
      std::cout << csv;
    } else {
      writeText(aggregateOut, csv);
      std::cout << "aggregate -> " << aggregateOut << '\n';
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
