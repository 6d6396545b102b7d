#include "dpq/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "dpq/log.hpp"
#include "dpq/text_io.hpp"

namespace dpq {

namespace {

std::string formatNumber(double value) {
  std::ostringstream s;
  s.precision(12);
  s << value;
  return s.str();
}

CompositionMode compositionModeFromString(const std::string& name) {
  if (name == "basic") return CompositionMode::basic;
  if (name == "advanced") return CompositionMode::advanced;
  if (name == "rdp") return CompositionMode::rdp;
  throw std::invalid_argument("unknown composition mode: " + name);
}

// Decorrelates workload generation from engine noise when both come from the
// same spec seed.
std::uint64_t mixSeed(std::uint64_t seed) { return seed ^ 0x9e3779b97f4a7c15ULL; }

std::size_t pickWeighted(const std::vector<double>& cumulative, double u) {
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u * cumulative.back());
  if (it == cumulative.end()) --it;
  return static_cast<std::size_t>(it - cumulative.begin());
}

std::vector<double> rankWeights(std::size_t n, double skew) {
  std::vector<double> cumulative(n);
  double total = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    total += 1.0 / std::pow(static_cast<double>(k + 1), skew);
    cumulative[k] = total;
  }
  return cumulative;
}

struct HookGuard {
  WarnHook previous = setWarnHook(WarnHook{});
  ~HookGuard() { setWarnHook(previous); }
};

void writeFile(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

}  // namespace

std::string toString(Scheduler scheduler) {
  return scheduler == Scheduler::roundRobin ? "roundRobin" : "random";
}

Scheduler schedulerFromString(const std::string& name) {
  if (name == "roundRobin") return Scheduler::roundRobin;
  if (name == "random") return Scheduler::random;
  throw std::invalid_argument("unknown scheduler: " + name);
}

long clampedNormalIndex(Rng& rng, const NormalParams& params, long lo, long hi, bool& clamped) {
  if (lo > hi) throw std::invalid_argument("empty clamp interval");
  double draw = params.mean + rng.gaussian(params.stddev);
  long rounded = std::lround(draw);
  clamped = rounded < lo || rounded > hi;
  return std::clamp(rounded, lo, hi);
}

std::vector<LinearQuery> generateRrq(const RrqConfig& config,
                                     const std::vector<AttributeSpec>& schema,
                                     const std::vector<Analyst>& analysts) {
  if (config.queriesPerAnalyst <= 0) throw std::invalid_argument("queriesPerAnalyst must be positive");
  if (schema.empty()) throw std::invalid_argument("schema has no attributes");
  if (analysts.empty()) throw std::invalid_argument("no analysts to schedule");
  if (!(config.perBinAccuracyLow > 0.0) || config.perBinAccuracyHigh < config.perBinAccuracyLow) {
    throw std::invalid_argument("per-bin accuracy range must be positive and ordered");
  }

  std::vector<double> cumulativeBias;
  if (config.attributeBias.empty()) {
    cumulativeBias = rankWeights(schema.size(), 1.0);
  } else {
    if (config.attributeBias.size() != schema.size()) {
      throw std::invalid_argument("attributeBias must give one weight per attribute");
    }
    double total = 0.0;
    for (double w : config.attributeBias) {
      if (!(w >= 0.0)) throw std::invalid_argument("attribute weights must be non-negative");
      total += w;
      cumulativeBias.push_back(total);
    }
    if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("attribute weights must sum to 1");
  }
  if (!config.rangeStart.empty() && config.rangeStart.size() != schema.size()) {
    throw std::invalid_argument("rangeStart must give one entry per attribute");
  }
  if (!config.rangeOffset.empty() && config.rangeOffset.size() != schema.size()) {
    throw std::invalid_argument("rangeOffset must give one entry per attribute");
  }

  Rng rng(config.seed);
  std::vector<LinearQuery> queries;
  std::size_t total = static_cast<std::size_t>(config.queriesPerAnalyst) * analysts.size();
  queries.reserve(total);
  double logSpan = std::log(config.perBinAccuracyHigh / config.perBinAccuracyLow);

  for (std::size_t i = 0; i < total; ++i) {
    const Analyst& analyst = config.scheduler == Scheduler::roundRobin
                                 ? analysts[i % analysts.size()]
                                 : analysts[rng.below(analysts.size())];
    std::size_t attr = pickWeighted(cumulativeBias, rng.uniform());
    long domain = static_cast<long>(schema[attr].domain.size());
    NormalParams startParams = config.rangeStart.empty()
                                   ? NormalParams{(domain - 1) / 2.0, domain / 4.0}
                                   : config.rangeStart[attr];
    NormalParams offsetParams = config.rangeOffset.empty()
                                    ? NormalParams{domain / 8.0, domain / 8.0}
                                    : config.rangeOffset[attr];
    bool clamped = false;
    long start = clampedNormalIndex(rng, startParams, 0, domain - 1, clamped);
    long offset = clampedNormalIndex(rng, offsetParams, 0, domain - 1 - start, clamped);

    LinearQuery q;
    q.viewId = schema[attr].name;
    q.analystId = analyst.id;
    q.coefficients.assign(static_cast<std::size_t>(domain), 0.0);
    for (long b = start; b <= start + offset; ++b) q.coefficients[static_cast<std::size_t>(b)] = 1.0;
    double perBin = config.perBinAccuracyLow * std::exp(rng.uniform() * logSpan);
    q.demand = AccuracyDemand{static_cast<double>(offset + 1) * perBin};
    queries.push_back(std::move(q));
  }
  return queries;
}

std::string bfsViewId(const BfsConfig& config) {
  std::string id;
  for (const auto& attr : config.rootAttributes) {
    if (!id.empty()) id += '+';
    id += attr;
  }
  return id;
}

BfsTrace runBfsTask(Engine& engine, const BfsConfig& config, const std::string& analystId) {
  if (config.branchingFactor < 2) throw std::invalid_argument("branching factor must be >= 2");
  if (config.thresholdLow > config.thresholdHigh) {
    throw std::invalid_argument("threshold range must be ordered");
  }
  if (!(config.perNodeVariance > 0.0)) throw std::invalid_argument("per-node accuracy must be positive");
  const HistogramView& view = engine.view(bfsViewId(config));
  std::size_t bins = view.binCount();

  BfsTrace trace;
  std::deque<std::pair<std::size_t, std::size_t>> frontier{{0, bins - 1}};
  while (!frontier.empty()) {
    auto [lo, hi] = frontier.front();
    frontier.pop_front();

    LinearQuery q;
    q.viewId = view.id;
    q.analystId = analystId;
    q.coefficients.assign(bins, 0.0);
    for (std::size_t b = lo; b <= hi; ++b) q.coefficients[b] = 1.0;
    q.demand = AccuracyDemand{config.perNodeVariance};
    QueryOutcome out = engine.handleQuery(q);

    BfsVisit visit;
    visit.lo = lo;
    visit.hi = hi;
    visit.answered = out.answered;
    visit.cumulativeEpsilon = engine.consumedEpsilon(analystId);
    if (!out.answered) {
      visit.reason = out.reason;
      trace.visits.push_back(std::move(visit));
      trace.completed = false;
      break;
    }
    visit.noisyCount = out.value;
    bool settled = out.value > config.thresholdLow && out.value < config.thresholdHigh;
    std::size_t width = hi - lo + 1;
    if (!settled && width >= 2) {
      visit.expanded = true;
      std::size_t parts = std::min<std::size_t>(static_cast<std::size_t>(config.branchingFactor), width);
      std::size_t base = width / parts;
      std::size_t rem = width % parts;
      std::size_t cursor = lo;
      for (std::size_t child = 0; child < parts; ++child) {
        std::size_t size = base + (child < rem ? 1 : 0);
        frontier.emplace_back(cursor, cursor + size - 1);
        cursor += size;
      }
    }
    trace.visits.push_back(std::move(visit));
  }
  return trace;
}

FairnessScore computeNdcfg(const std::map<std::string, int>& answeredCounts,
                           const std::map<std::string, int>& privileges) {
  FairnessScore score;
  long totalAnswered = 0;
  for (const auto& [analyst, count] : answeredCounts) {
    if (count < 0) throw std::invalid_argument("answered counts must be non-negative");
    auto it = privileges.find(analyst);
    if (it == privileges.end()) throw std::invalid_argument("missing privilege for analyst " + analyst);
    if (it->second < 1) throw std::invalid_argument("privilege must be at least 1");
    score.dcfg += count / std::log2(1.0 / it->second + 1.0);
    totalAnswered += count;
  }
  score.ndcfg = totalAnswered > 0 ? score.dcfg / static_cast<double>(totalAnswered) : 0.0;
  return score;
}

double computeRelativeError(double trueValue, double noisyValue, double floor) {
  if (!(floor > 0.0)) throw std::invalid_argument("error floor must be positive");
  return std::abs(trueValue - noisyValue) / std::max(trueValue, floor);
}

Dataset syntheticAdultLike(std::size_t rows, std::uint64_t seed, double skew) {
  if (!(skew >= 0.0)) throw std::invalid_argument("skew must be non-negative");
  Dataset dataset;
  auto rangeDomain = [](int lo, int hi) {
    std::vector<std::string> values;
    for (int v = lo; v <= hi; ++v) values.push_back(std::to_string(v));
    return values;
  };
  dataset.schema = {
      {"age", rangeDomain(17, 90)},
      {"workclass",
       {"private", "self-emp-inc", "self-emp", "federal-gov", "state-gov", "local-gov",
        "without-pay", "never-worked"}},
      {"education",
       {"hs-grad", "some-college", "bachelors", "masters", "assoc-voc", "assoc-acdm", "11th",
        "10th", "7th-8th", "prof-school", "9th", "12th", "doctorate", "5th-6th", "1st-4th",
        "preschool"}},
      {"marital",
       {"married", "never-married", "divorced", "separated", "widowed", "spouse-absent",
        "af-spouse"}},
      {"occupation",
       {"prof-specialty", "craft-repair", "exec-managerial", "adm-clerical", "sales",
        "other-service", "machine-op", "transport", "handlers", "farming-fishing",
        "tech-support", "protective-serv", "priv-house-serv", "armed-forces"}},
      {"race", {"white", "black", "asian-pac", "amer-indian", "other"}},
      {"sex", {"male", "female"}},
      {"hours", rangeDomain(1, 99)},
  };

  std::vector<std::vector<double>> categoricalCdf(dataset.schema.size());
  for (std::size_t a = 0; a < dataset.schema.size(); ++a) {
    categoricalCdf[a] = rankWeights(dataset.schema[a].domain.size(), skew);
  }

  Rng rng(seed);
  dataset.rows.reserve(rows);
  bool clamped = false;
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<std::uint32_t> row(dataset.schema.size());
    row[0] = static_cast<std::uint32_t>(clampedNormalIndex(rng, {38.0 - 17.0, 13.0}, 0, 73, clamped));
    row[1] = static_cast<std::uint32_t>(pickWeighted(categoricalCdf[1], rng.uniform()));
    row[2] = static_cast<std::uint32_t>(pickWeighted(categoricalCdf[2], rng.uniform()));
    row[3] = static_cast<std::uint32_t>(pickWeighted(categoricalCdf[3], rng.uniform()));
    row[4] = static_cast<std::uint32_t>(pickWeighted(categoricalCdf[4], rng.uniform()));
    row[5] = static_cast<std::uint32_t>(pickWeighted(categoricalCdf[5], rng.uniform()));
    row[6] = static_cast<std::uint32_t>(pickWeighted(categoricalCdf[6], rng.uniform()));
    row[7] = static_cast<std::uint32_t>(clampedNormalIndex(rng, {40.0 - 1.0, 12.0}, 0, 98, clamped));
    dataset.rows.push_back(std::move(row));
  }
  return dataset;
}

nlohmann::json reportToJson(const RunReport& report) {
  return nlohmann::json{{"submitted", report.submitted},
                        {"answered", report.answered},
                        {"rejected", report.rejected},
                        {"cumulativeEpsilon", report.cumulativeEpsilon},
                        {"rejectionReasons", report.rejectionReasons},
                        {"dcfg", report.dcfg},
                        {"ndcfg", report.ndcfg},
                        {"relativeErrors", report.relativeErrors},
                        {"meanRelativeError", report.meanRelativeError},
                        {"totalDelta", report.totalDelta},
                        {"runtimeMs", report.runtimeMs},
                        {"meanQueryMs", report.meanQueryMs},
                        {"clampEvents", report.clampEvents}};
}

namespace {

void finalizeReport(Engine& engine, const std::map<std::string, int>& privileges,
                    RunReport& report) {
  FairnessScore score = computeNdcfg(report.answered, privileges);
  report.dcfg = score.dcfg;
  report.ndcfg = score.ndcfg;
  report.meanRelativeError =
      report.relativeErrors.empty()
          ? 0.0
          : std::accumulate(report.relativeErrors.begin(), report.relativeErrors.end(), 0.0) /
                static_cast<double>(report.relativeErrors.size());
  report.totalDelta = engine.table().totalDelta();
  long submittedTotal = 0;
  for (const auto& [analyst, count] : report.submitted) submittedTotal += count;
  report.meanQueryMs = submittedTotal > 0 ? report.runtimeMs / static_cast<double>(submittedTotal) : 0.0;
  for (const auto& note : engine.notes()) {
    if (note.rfind("clamp ", 0) == 0) ++report.clampEvents;
  }
}

}  // namespace

RunReport runRrqWorkload(Engine& engine, const std::vector<LinearQuery>& queries,
                         const std::map<std::string, int>& privileges, double relativeErrorFloor,
                         std::vector<QueryOutcome>* outcomes) {
  RunReport report;
  for (const auto& [analyst, privilege] : privileges) {
    report.submitted[analyst] = 0;
    report.answered[analyst] = 0;
    report.rejected[analyst] = 0;
    report.cumulativeEpsilon[analyst] = 0.0;
  }
  for (const auto& q : queries) {
    auto before = std::chrono::steady_clock::now();
    QueryOutcome out = engine.handleQuery(q);
    auto after = std::chrono::steady_clock::now();
    report.runtimeMs += std::chrono::duration<double, std::milli>(after - before).count();

    ++report.submitted[q.analystId];
    if (out.answered) {
      ++report.answered[q.analystId];
      if (const auto* demand = std::get_if<AccuracyDemand>(&q.demand)) {
        if (out.varianceBound > demand->targetVariance * (1.0 + 1e-9)) {
          throw std::logic_error("answered query exceeds its accuracy target");
        }
      }
      double truth = evaluateQueryTrue(engine.view(q.viewId), q);
      report.relativeErrors.push_back(computeRelativeError(truth, out.value, relativeErrorFloor));
    } else {
      ++report.rejected[q.analystId];
      ++report.rejectionReasons[out.reason];
    }
    report.cumulativeEpsilon[q.analystId] = engine.consumedEpsilon(q.analystId);
    if (outcomes) outcomes->push_back(out);
  }
  finalizeReport(engine, privileges, report);
  return report;
}

BfsCellResult runBfsWorkload(Engine& engine, const BfsConfig& config,
                             const std::vector<Analyst>& analysts, double relativeErrorFloor) {
  BfsCellResult result;
  std::map<std::string, int> privileges;
  for (const auto& a : analysts) privileges[a.id] = a.privilege;
  RunReport& report = result.report;
  for (const auto& [analyst, privilege] : privileges) {
    report.submitted[analyst] = 0;
    report.answered[analyst] = 0;
    report.rejected[analyst] = 0;
    report.cumulativeEpsilon[analyst] = 0.0;
  }
  const HistogramView& view = engine.view(bfsViewId(config));

  for (const auto& analyst : analysts) {
    auto before = std::chrono::steady_clock::now();
    BfsTrace trace = runBfsTask(engine, config, analyst.id);
    auto after = std::chrono::steady_clock::now();
    report.runtimeMs += std::chrono::duration<double, std::milli>(after - before).count();

    for (const auto& visit : trace.visits) {
      ++report.submitted[analyst.id];
      if (visit.answered) {
        ++report.answered[analyst.id];
        double truth = 0.0;
        for (std::size_t b = visit.lo; b <= visit.hi; ++b) {
          truth += static_cast<double>(view.trueCounts[b]);
        }
        report.relativeErrors.push_back(
            computeRelativeError(truth, visit.noisyCount, relativeErrorFloor));
      } else {
        ++report.rejected[analyst.id];
        ++report.rejectionReasons[visit.reason];
      }
    }
    report.cumulativeEpsilon[analyst.id] = engine.consumedEpsilon(analyst.id);
    result.traces.emplace(analyst.id, std::move(trace));
  }
  finalizeReport(engine, privileges, report);
  return result;
}

namespace {

nlohmann::json bfsTracesToJson(const std::map<std::string, BfsTrace>& traces) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [analyst, trace] : traces) {
    nlohmann::json visits = nlohmann::json::array();
    for (const auto& v : trace.visits) {
      visits.push_back({{"lo", v.lo},
                        {"hi", v.hi},
                        {"answered", v.answered},
                        {"noisyCount", v.noisyCount},
                        {"expanded", v.expanded},
                        {"cumulativeEpsilon", v.cumulativeEpsilon},
                        {"reason", v.reason}});
    }
    out[analyst] = {{"completed", trace.completed}, {"visits", visits}};
  }
  return out;
}

}  // namespace

std::vector<ExperimentCell> runExperiment(const nlohmann::json& spec) {
  Dataset dataset;
  const auto& ds = spec.at("dataset");
  if (ds.contains("synthetic")) {
    const auto& syn = ds.at("synthetic");
    dataset = syntheticAdultLike(syn.value("rows", std::size_t{10000}),
                                 syn.value("seed", std::uint64_t{5}), syn.value("skew", 1.0));
  } else if (ds.contains("path")) {
    dataset = loadDataset(ds.at("path").get<std::string>());
  } else {
    throw std::invalid_argument("dataset needs synthetic parameters or a path");
  }

  std::vector<HistogramView> viewTemplates;
  if (!spec.contains("views") ||
      (spec.at("views").is_string() && spec.at("views").get<std::string>() == "perAttribute")) {
    for (const auto& attr : dataset.schema) viewTemplates.push_back(buildView(dataset, {attr.name}));
  } else {
    for (const auto& v : spec.at("views")) {
      auto attrs = v.at("attributes").get<std::vector<std::string>>();
      auto widths = v.value("widths", std::vector<std::uint32_t>{});
      viewTemplates.push_back(buildView(dataset, attrs, widths, v.value("id", std::string{})));
    }
  }

  std::vector<Analyst> analysts;
  std::map<std::string, int> privileges;
  for (const auto& a : spec.at("analysts")) {
    Analyst analyst{a.at("id").get<std::string>(), a.at("privilege").get<int>()};
    privileges[analyst.id] = analyst.privilege;
    analysts.push_back(std::move(analyst));
  }

  std::vector<MechanismKind> mechanisms;
  for (const auto& m : spec.at("mechanisms")) {
    mechanisms.push_back(mechanismFromString(m.get<std::string>()));
  }
  std::vector<double> psis;
  if (spec.at("psiTable").is_array()) {
    psis = spec.at("psiTable").get<std::vector<double>>();
  } else {
    psis.push_back(spec.at("psiTable").get<double>());
  }
  auto seeds = spec.value("seeds", std::vector<std::uint64_t>{1, 2, 3, 4});
  double relativeErrorFloor = spec.value("relativeErrorFloor", 1.0);

  const auto& w = spec.at("workload");
  std::string kind = w.value("kind", std::string{"rrq"});
  RrqConfig rrq;
  BfsConfig bfs;
  if (kind == "rrq") {
    rrq.queriesPerAnalyst = w.value("queriesPerAnalyst", 500);
    rrq.scheduler = schedulerFromString(w.value("scheduler", std::string{"roundRobin"}));
    if (w.contains("perBinAccuracy")) {
      rrq.perBinAccuracyLow = w.at("perBinAccuracy").at(0).get<double>();
      rrq.perBinAccuracyHigh = w.at("perBinAccuracy").at(1).get<double>();
    }
    if (w.contains("attributeBias")) {
      rrq.attributeBias = w.at("attributeBias").get<std::vector<double>>();
    }
  } else if (kind == "bfs") {
    bfs.rootAttributes = w.value("rootAttributes", std::vector<std::string>{"age"});
    bfs.branchingFactor = w.value("branchingFactor", 2);
    if (w.contains("threshold")) {
      bfs.thresholdLow = w.at("threshold").at(0).get<double>();
      bfs.thresholdHigh = w.at("threshold").at(1).get<double>();
    }
    bfs.perNodeVariance = w.value("perNodeVariance", 8000.0);
  } else {
    throw std::invalid_argument("unknown workload kind: " + kind);
  }

  std::filesystem::path outDir;
  bool writeArtifacts = spec.contains("outputDir");
  bool writeTraces = spec.value("writeTraces", false);
  if (writeArtifacts) {
    outDir = spec.at("outputDir").get<std::string>();
    std::filesystem::create_directories(outDir);
    if (writeTraces) std::filesystem::create_directories(outDir / "traces");
  }

  HookGuard quiet;
  std::vector<ExperimentCell> cells;
  for (std::uint64_t seed : seeds) {
    std::vector<LinearQuery> queries;
    if (kind == "rrq") {
      rrq.seed = mixSeed(seed);
      queries = generateRrq(rrq, dataset.schema, analysts);
    }
    for (double psi : psis) {
      for (MechanismKind mechanism : mechanisms) {
        EngineConfig cfg;
        cfg.mechanism = mechanism;
        cfg.psiTable = psi;
        cfg.delta = spec.value("delta", 1e-9);
        cfg.translatePrecision = spec.value("translatePrecision", 1e-3);
        cfg.constraintMode =
            constraintModeFromString(spec.value("constraintMode", std::string{"maxNormalized"}));
        cfg.tau = spec.value("tau", 1.0);
        cfg.reportMode = compositionModeFromString(spec.value("reportMode", std::string{"basic"}));
        cfg.seed = seed;
        Engine engine(cfg, viewTemplates, analysts, dataset.rows.size());

        ExperimentCell cell;
        cell.mechanism = mechanism;
        cell.psiTable = psi;
        cell.seed = seed;
        nlohmann::json traceJson;
        if (kind == "rrq") {
          std::vector<QueryOutcome> outcomes;
          cell.report = runRrqWorkload(engine, queries, privileges, relativeErrorFloor,
                                       writeTraces ? &outcomes : nullptr);
          if (writeTraces) {
            traceJson = nlohmann::json::array();
            for (const auto& out : outcomes) traceJson.push_back(outcomeToJson(out));
          }
        } else {
          BfsCellResult result = runBfsWorkload(engine, bfs, analysts, relativeErrorFloor);
          cell.report = result.report;
          if (writeTraces) traceJson = bfsTracesToJson(result.traces);
        }
        if (writeTraces) {
          std::string name = "trace-" + toString(mechanism) + "-psi" + formatNumber(psi) +
                             "-seed" + std::to_string(seed) + ".json";
          writeFile(outDir / "traces" / name, traceJson.dump(2));
        }
        cells.push_back(std::move(cell));
      }
    }
  }

  if (writeArtifacts) {
    writeFile(outDir / "summary.csv", summaryCsv(cells));
    writeFile(outDir / "analysts.csv", analystCsv(cells, analysts));
    writeFile(outDir / "report.json", cellsToJson(cells).dump(2));
  }
  return cells;
}

std::string summaryCsv(const std::vector<ExperimentCell>& cells) {
  std::ostringstream out;
  out << "mechanism,psi_table,seed,submitted,answered,rejected,dcfg,ndcfg,"
         "mean_relative_error,total_delta,clamp_events,runtime_ms,mean_query_ms\n";
  for (const auto& cell : cells) {
    long submitted = 0;
    long answered = 0;
    long rejected = 0;
    for (const auto& [analyst, count] : cell.report.submitted) submitted += count;
    for (const auto& [analyst, count] : cell.report.answered) answered += count;
    for (const auto& [analyst, count] : cell.report.rejected) rejected += count;
    out << toString(cell.mechanism) << ',' << formatNumber(cell.psiTable) << ',' << cell.seed
        << ',' << submitted << ',' << answered << ',' << rejected << ','
        << formatNumber(cell.report.dcfg) << ',' << formatNumber(cell.report.ndcfg) << ','
        << formatNumber(cell.report.meanRelativeError) << ','
        << formatNumber(cell.report.totalDelta) << ',' << cell.report.clampEvents << ','
        << formatNumber(cell.report.runtimeMs) << ',' << formatNumber(cell.report.meanQueryMs)
        << '\n';
  }
  return out.str();
}

std::string analystCsv(const std::vector<ExperimentCell>& cells,
                       const std::vector<Analyst>& analysts) {
  std::map<std::string, int> privileges;
  for (const auto& a : analysts) privileges[a.id] = a.privilege;
  std::ostringstream out;
  out << "mechanism,psi_table,seed,analyst,privilege,submitted,answered,rejected,"
         "cumulative_epsilon\n";
  for (const auto& cell : cells) {
    for (const auto& [analyst, submitted] : cell.report.submitted) {
      out << toString(cell.mechanism) << ',' << formatNumber(cell.psiTable) << ',' << cell.seed
          << ',' << analyst << ',' << privileges.at(analyst) << ',' << submitted << ','
          << cell.report.answered.at(analyst) << ',' << cell.report.rejected.at(analyst) << ','
          << formatNumber(cell.report.cumulativeEpsilon.at(analyst)) << '\n';
    }
  }
  return out.str();
}

nlohmann::json cellsToJson(const std::vector<ExperimentCell>& cells) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& cell : cells) {
    out.push_back({{"mechanism", toString(cell.mechanism)},
                   {"psiTable", cell.psiTable},
                   {"seed", cell.seed},
                   {"report", reportToJson(cell.report)}});
  }
  return out;
}

std::string aggregateCsv(const nlohmann::json& cells) {
  struct Acc {
    int cells = 0;
    double answered = 0.0;
    double ndcfg = 0.0;
    double relError = 0.0;
    double runtime = 0.0;
  };
  std::map<std::pair<std::string, double>, Acc> groups;
  for (const auto& cell : cells) {
    Acc& acc = groups[{cell.at("mechanism").get<std::string>(), cell.at("psiTable").get<double>()}];
    ++acc.cells;
    const auto& report = cell.at("report");
    long answered = 0;
    for (const auto& [analyst, count] : report.at("answered").items()) {
      answered += count.get<long>();
    }
    acc.answered += static_cast<double>(answered);
    acc.ndcfg += report.at("ndcfg").get<double>();
    acc.relError += report.at("meanRelativeError").get<double>();
    acc.runtime += report.at("runtimeMs").get<double>();
  }
  std::ostringstream out;
  out << "mechanism,psi_table,cells,answered_mean,ndcfg_mean,mean_relative_error_mean,"
         "runtime_ms_mean\n";
  for (const auto& [key, acc] : groups) {
    double n = static_cast<double>(acc.cells);
    out << key.first << ',' << formatNumber(key.second) << ',' << acc.cells << ','
        << formatNumber(acc.answered / n) << ',' << formatNumber(acc.ndcfg / n) << ','
        << formatNumber(acc.relError / n) << ',' << formatNumber(acc.runtime / n) << '\n';
  }
  return out.str();
}

}  // namespace dpq
