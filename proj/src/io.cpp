#include "itemgauge/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>

namespace itemgauge::io {

namespace {

using nlohmann::json;

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string(), path.string(), 0);
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  // The toolkit's CSV dialect: comma-separated, double quotes for fields that
  // contain commas/quotes, no embedded newlines.
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// items.jsonl
// ---------------------------------------------------------------------------

std::vector<Mcq> read_items_jsonl(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::vector<Mcq> items;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": invalid JSON: " +
                           e.what(),
                       path.string(), line_no);
    }
    try {
      Mcq item;
      item.item_id = j.at("item_id").get<std::string>();
      item.concept_id = j.at("concept_id").get<std::string>();
      const auto domain = domain_from_string(j.value("domain", "other"));
      if (!domain)
        throw ParseError(path.string() + ":" + std::to_string(line_no) + ": unknown domain",
                         path.string(), line_no);
      item.domain = *domain;
      item.stem = j.at("stem").get<std::string>();
      item.options = j.at("options").get<std::vector<std::string>>();
      item.correct_index = j.at("correct_index").get<int>();
      items.push_back(std::move(item));
    } catch (const json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": bad item record: " +
                           e.what(),
                       path.string(), line_no);
    }
  }
  return items;
}

void write_items_jsonl(const std::filesystem::path& path, const std::vector<Mcq>& items) {
  auto out = open_output(path);
  for (const auto& item : items) {
    ordered_json j{{"item_id", item.item_id},
                   {"concept_id", item.concept_id},
                   {"domain", itemgauge::to_string(item.domain)},
                   {"stem", item.stem},
                   {"options", item.options},
                   {"correct_index", item.correct_index}};
    out << j.dump() << "\n";
  }
}

// ---------------------------------------------------------------------------
// responses.csv
// ---------------------------------------------------------------------------

std::vector<ResponseRecord> read_responses_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::vector<ResponseRecord> records;
  std::string line;
  long line_no = 0;
  if (!std::getline(in, line))
    throw ParseError(path.string() + ": empty file (expected header)", path.string(), 0);
  ++line_no;
  if (strip_cr(line) != "student_id,item_id,outcome")
    throw ParseError(path.string() + ":1: expected header student_id,item_id,outcome",
                     path.string(), 1);
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 3)
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected 3 fields, got " +
                           std::to_string(fields.size()),
                       path.string(), line_no);
    ResponseRecord rec;
    rec.student_id = fields[0];
    rec.item_id = fields[1];
    if (fields[2] == "0") {
      rec.outcome = 0;
    } else if (fields[2] == "1") {
      rec.outcome = 1;
    } else {
      throw ParseError(path.string() + ":" + std::to_string(line_no) +
                           ": outcome must be 0 or 1, got \"" + fields[2] + "\"",
                       path.string(), line_no);
    }
    if (rec.student_id.empty() || rec.item_id.empty())
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": empty id field",
                       path.string(), line_no);
    records.push_back(std::move(rec));
  }
  return records;
}

void write_responses_csv(const std::filesystem::path& path,
                         const std::vector<ResponseRecord>& records) {
  auto out = open_output(path);
  out << "student_id,item_id,outcome\n";
  for (const auto& rec : records) {
    out << csv_escape(rec.student_id) << "," << csv_escape(rec.item_id) << "," << rec.outcome
        << "\n";
  }
}

void write_responses_csv(const std::filesystem::path& path,
                         const std::vector<ResponseMatrix>& matrices) {
  auto out = open_output(path);
  out << "student_id,item_id,outcome\n";
  for (const auto& m : matrices) {
    for (std::size_t s = 0; s < m.rows.size(); ++s) {
      for (const auto& [item, outcome] : m.rows[s]) {
        out << csv_escape(m.student_ids[s]) << ","
            << csv_escape(m.item_ids[static_cast<std::size_t>(item)]) << "," << outcome << "\n";
      }
    }
  }
}

BuiltMatrices build_matrices(const std::vector<ResponseRecord>& records,
                             const std::map<std::string, std::string>& item_to_concept) {
  BuiltMatrices out;
  struct ConceptAccum {
    std::map<std::string, int> student_index;
    std::map<std::string, int> item_index;
    std::vector<std::string> student_ids;
    std::vector<std::string> item_ids;
    std::map<std::pair<int, int>, int> observed;
  };
  std::map<std::string, ConceptAccum> by_concept;

  for (const auto& rec : records) {
    const auto concept_it = item_to_concept.find(rec.item_id);
    if (concept_it == item_to_concept.end())
      throw ParseError("response references unknown item_id \"" + rec.item_id + "\"", "", 0);
    auto& acc = by_concept[concept_it->second];
    auto [s_it, s_new] = acc.student_index.emplace(rec.student_id,
                                                   static_cast<int>(acc.student_ids.size()));
    if (s_new) acc.student_ids.push_back(rec.student_id);
    auto [i_it, i_new] =
        acc.item_index.emplace(rec.item_id, static_cast<int>(acc.item_ids.size()));
    if (i_new) acc.item_ids.push_back(rec.item_id);
    const auto key = std::make_pair(s_it->second, i_it->second);
    if (!acc.observed.emplace(key, rec.outcome).second) {
      out.duplicates.entries.push_back(
          {"response", rec.student_id + "/" + rec.item_id, "duplicate_response"});
    }
  }

  for (auto& [concept_id, acc] : by_concept) {
    ResponseMatrix m;
    m.concept_id = concept_id;
    m.student_ids = std::move(acc.student_ids);
    m.item_ids = std::move(acc.item_ids);
    m.rows.resize(m.student_ids.size());
    for (const auto& [key, outcome] : acc.observed) {
      m.rows[static_cast<std::size_t>(key.first)].emplace_back(key.second, outcome);
    }
    for (auto& row : m.rows) std::sort(row.begin(), row.end());
    out.matrices.push_back(std::move(m));
  }
  return out;
}

// ---------------------------------------------------------------------------
// params.csv
// ---------------------------------------------------------------------------

std::vector<ParamsRow> read_params_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::vector<ParamsRow> rows;
  std::string line;
  long line_no = 0;
  if (!std::getline(in, line))
    throw ParseError(path.string() + ": empty file (expected header)", path.string(), 0);
  ++line_no;
  if (strip_cr(line) != "item_id,concept_id,alpha,delta,n_responses,flags")
    throw ParseError(path.string() + ":1: unexpected params.csv header", path.string(), 1);
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 6)
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected 6 fields",
                       path.string(), line_no);
    ParamsRow row;
    row.params.item_id = fields[0];
    row.concept_id = fields[1];
    try {
      row.params.alpha = std::stod(fields[2]);
      row.params.delta = std::stod(fields[3]);
      row.params.n_responses = std::stol(fields[4]);
    } catch (const std::exception&) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": bad numeric field",
                       path.string(), line_no);
    }
    if (!fields[5].empty()) {
      std::stringstream ss(fields[5]);
      std::string token;
      while (std::getline(ss, token, ';')) {
        const auto flag = item_flag_from_string(token);
        if (!flag)
          throw ParseError(path.string() + ":" + std::to_string(line_no) + ": unknown flag \"" +
                               token + "\"",
                           path.string(), line_no);
        row.params.flags.insert(*flag);
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_params_csv(const std::filesystem::path& path, const std::vector<ParamsRow>& rows) {
  auto out = open_output(path);
  out << "item_id,concept_id,alpha,delta,n_responses,flags\n";
  for (const auto& row : rows) {
    std::string flags;
    for (ItemFlag f : row.params.flags) {
      if (!flags.empty()) flags += ";";
      flags += itemgauge::to_string(f);
    }
    out << csv_escape(row.params.item_id) << "," << csv_escape(row.concept_id) << ","
        << format_number(row.params.alpha) << "," << format_number(row.params.delta) << ","
        << row.params.n_responses << "," << flags << "\n";
  }
}

void write_exclusions_csv(const std::filesystem::path& path, const irt::ExclusionReport& report) {
  auto out = open_output(path);
  out << "entity,id,reason\n";
  for (const auto& e : report.entries) {
    out << csv_escape(e.entity) << "," << csv_escape(e.id) << "," << csv_escape(e.reason) << "\n";
  }
}

// ---------------------------------------------------------------------------
// flaws.jsonl
// ---------------------------------------------------------------------------

std::vector<IwfAnnotation> read_flaws_jsonl(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::vector<IwfAnnotation> annotations;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": invalid JSON: " +
                           e.what(),
                       path.string(), line_no);
    }
    try {
      IwfAnnotation ann;
      ann.item_id = j.at("item_id").get<std::string>();
      const auto& flags = j.at("flags");
      const auto& tiers = j.at("tiers");
      const auto evidence = j.value("evidence", json::object());
      for (Criterion c : all_criteria()) {
        const auto key = itemgauge::to_string(c);
        const auto idx = static_cast<std::size_t>(c);
        ann.flags[idx] = flags.at(key).get<bool>();
        const auto tier = tier_from_string(tiers.at(key).get<std::string>());
        if (!tier)
          throw ParseError(path.string() + ":" + std::to_string(line_no) + ": unknown tier",
                           path.string(), line_no);
        ann.tiers[idx] = *tier;
        if (evidence.contains(key)) ann.evidence[idx] = evidence[key].get<std::string>();
      }
      annotations.push_back(std::move(ann));
    } catch (const json::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": bad flaw record: " +
                           e.what(),
                       path.string(), line_no);
    }
  }
  return annotations;
}

void write_flaws_jsonl(const std::filesystem::path& path,
                       const std::vector<IwfAnnotation>& annotations) {
  auto out = open_output(path);
  for (const auto& ann : annotations) {
    ordered_json flags = ordered_json::object();
    ordered_json evidence = ordered_json::object();
    ordered_json tiers = ordered_json::object();
    for (Criterion c : all_criteria()) {
      const auto key = itemgauge::to_string(c);
      const auto idx = static_cast<std::size_t>(c);
      flags[key] = ann.flags[idx];
      tiers[key] = itemgauge::to_string(ann.tiers[idx]);
      if (ann.flags[idx]) evidence[key] = ann.evidence[idx];
    }
    ordered_json j{{"item_id", ann.item_id},
                   {"flags", std::move(flags)},
                   {"evidence", std::move(evidence)},
                   {"tiers", std::move(tiers)}};
    out << j.dump() << "\n";
  }
}

ordered_json summary_to_json(const iwf::BankSummary& summary) {
  ordered_json prevalence = ordered_json::object();
  for (Criterion c : all_criteria()) {
    prevalence[itemgauge::to_string(c)] = summary.prevalence[static_cast<std::size_t>(c)];
  }
  return ordered_json{{"n_items", summary.n_items},
                      {"total_flaws", summary.total_flags},
                      {"flaws_per_question", summary.mean_flags_per_item},
                      {"prevalence", std::move(prevalence)}};
}

ordered_json rq1_to_json(const stats::Rq1Report& report) {
  ordered_json cells = ordered_json::array();
  for (const auto& cell : report.cells) {
    ordered_json j{{"stratum", cell.stratum},
                   {"family", cell.family},
                   {"method", stats::to_string(cell.result.method)},
                   {"skipped", cell.skipped}};
    if (cell.skipped) {
      j["note"] = cell.note;
    } else {
      j["n"] = cell.result.n;
      j["r"] = cell.result.r;
      j["ci95"] = ordered_json::array({cell.result.ci_low, cell.result.ci_high});
      j["p_raw"] = cell.result.p_raw;
      j["p_adjusted"] = cell.result.p_adjusted;
      j["reject"] = cell.reject;
    }
    cells.push_back(std::move(j));
  }
  return ordered_json{{"alpha", report.alpha}, {"cells", std::move(cells)}};
}

namespace {

ordered_json nan_safe(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

}  // namespace

ordered_json rq2_to_json(const stats::Rq2Report& report) {
  ordered_json cells = ordered_json::array();
  for (const auto& cell : report.cells) {
    ordered_json j{{"stratum", cell.stratum},
                   {"target", cell.target},
                   {"family", cell.target + "/" + cell.stratum},
                   {"skipped", cell.skipped}};
    if (cell.skipped) {
      j["note"] = cell.note;
      cells.push_back(std::move(j));
      continue;
    }
    j["n"] = cell.fit.n;
    j["r_squared"] = cell.fit.r_squared;
    j["intercept"] = ordered_json{{"coefficient", cell.fit.intercept},
                                  {"robust_se", cell.fit.intercept_se},
                                  {"t", nan_safe(cell.fit.intercept_t)},
                                  {"p_raw", nan_safe(cell.fit.intercept_p)}};
    ordered_json coefs = ordered_json::array();
    for (Criterion c : all_criteria()) {
      const auto idx = static_cast<std::size_t>(c);
      ordered_json entry{{"criterion", itemgauge::to_string(c)},
                         {"dropped", cell.fit.dropped[idx]}};
      if (!cell.fit.dropped[idx]) {
        entry["coefficient"] = nan_safe(cell.fit.coefficients[idx]);
        entry["robust_se"] = nan_safe(cell.fit.robust_se[idx]);
        entry["t"] = nan_safe(cell.fit.t_stats[idx]);
        entry["p_raw"] = nan_safe(cell.fit.p_raw[idx]);
        entry["p_adjusted"] = nan_safe(cell.fit.p_adjusted[idx]);
        entry["ci95"] =
            ordered_json::array({nan_safe(cell.fit.ci_low[idx]), nan_safe(cell.fit.ci_high[idx])});
        entry["reject"] = cell.reject[idx];
      }
      coefs.push_back(std::move(entry));
    }
    j["coefficients"] = std::move(coefs);
    ordered_json vif = ordered_json::object();
    for (Criterion c : all_criteria()) {
      vif[itemgauge::to_string(c)] =
          nan_safe(cell.diagnostics.vif[static_cast<std::size_t>(c)]);
    }
    j["diagnostics"] =
        ordered_json{{"vif", std::move(vif)},
                     {"durbin_watson", nan_safe(cell.diagnostics.durbin_watson)},
                     {"breusch_pagan",
                      ordered_json{{"statistic", cell.diagnostics.breusch_pagan.statistic},
                                   {"p", cell.diagnostics.breusch_pagan.p_value}}}};
    cells.push_back(std::move(j));
  }
  return ordered_json{{"alpha", report.alpha}, {"cells", std::move(cells)}};
}

// ---------------------------------------------------------------------------
// ground_truth.json
// ---------------------------------------------------------------------------

void write_ground_truth(const std::filesystem::path& path, const sim::GroundTruth& truth) {
  ordered_json items = ordered_json::array();
  for (const auto& item : truth.items) {
    ordered_json flags = ordered_json::array();
    for (bool f : item.flags) flags.push_back(f);
    items.push_back(ordered_json{{"item_id", item.item_id},
                                 {"concept_id", item.concept_id},
                                 {"alpha", item.alpha},
                                 {"delta", item.delta},
                                 {"flags", std::move(flags)}});
  }
  ordered_json students = ordered_json::array();
  for (const auto& s : truth.students) {
    students.push_back(ordered_json{{"student_id", s.student_id},
                                    {"concept_id", s.concept_id},
                                    {"theta", s.theta}});
  }
  auto out = open_output(path);
  out << ordered_json{{"items", std::move(items)}, {"students", std::move(students)}}.dump(2)
      << "\n";
}

sim::GroundTruth read_ground_truth(const std::filesystem::path& path) {
  auto in = open_input(path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": invalid JSON: " + e.what(), path.string(), 0);
  }
  sim::GroundTruth truth;
  try {
    for (const auto& item : j.at("items")) {
      sim::TrueItem t;
      t.item_id = item.at("item_id").get<std::string>();
      t.concept_id = item.at("concept_id").get<std::string>();
      t.alpha = item.at("alpha").get<double>();
      t.delta = item.at("delta").get<double>();
      const auto& flags = item.at("flags");
      if (flags.size() != kCriterionCount)
        throw ParseError(path.string() + ": flag vector must have 19 entries", path.string(), 0);
      for (int f = 0; f < kCriterionCount; ++f)
        t.flags[static_cast<std::size_t>(f)] = flags[static_cast<std::size_t>(f)].get<bool>();
      truth.items.push_back(std::move(t));
    }
    for (const auto& s : j.at("students")) {
      truth.students.push_back({s.at("student_id").get<std::string>(),
                                s.at("concept_id").get<std::string>(),
                                s.at("theta").get<double>()});
    }
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": bad ground truth: " + e.what(), path.string(), 0);
  }
  return truth;
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

std::string sha256_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) throw Error("sha256: cannot allocate digest context");
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buffer[1 << 16];
  while (in) {
    in.read(buffer, sizeof(buffer));
    const auto got = in.gcount();
    if (got > 0) EVP_DigestUpdate(ctx, buffer, static_cast<std::size_t>(got));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

std::string current_timestamp_utc() {
  std::time_t t;
  if (const char* env = std::getenv("SOURCE_DATE_EPOCH"); env != nullptr) {
    t = static_cast<std::time_t>(std::strtoll(env, nullptr, 10));
  } else {
    t = std::time(nullptr);
  }
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

void write_manifest(const std::filesystem::path& out_dir, const RunManifest& manifest) {
  ordered_json digests = ordered_json::object();
  for (const auto& [path, digest] : manifest.input_digests) digests[path] = digest;
  ordered_json j{{"command", manifest.command},
                 {"config", manifest.config},
                 {"input_digests", std::move(digests)},
                 {"master_seed", manifest.master_seed},
                 {"tool_version", manifest.tool_version},
                 {"created_utc", manifest.created_utc}};
  auto out = open_output(out_dir / "manifest.json");
  out << j.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// Config sections
// ---------------------------------------------------------------------------

namespace {

template <typename T>
void maybe(const json& j, const char* key, T& target) {
  if (j.contains(key)) target = j.at(key).get<T>();
}

std::array<double, kCriterionCount> vector19(const json& j, const std::string& context) {
  std::array<double, kCriterionCount> out{};
  if (j.is_array()) {
    if (j.size() != kCriterionCount)
      throw ParseError(context + ": expected 19 entries, got " + std::to_string(j.size()), "", 0);
    for (int i = 0; i < kCriterionCount; ++i)
      out[static_cast<std::size_t>(i)] = j[static_cast<std::size_t>(i)].get<double>();
    return out;
  }
  if (j.is_object()) {
    for (const auto& [key, value] : j.items()) {
      const auto c = criterion_from_string(key);
      if (!c) throw ParseError(context + ": unknown criterion \"" + key + "\"", "", 0);
      out[static_cast<std::size_t>(*c)] = value.get<double>();
    }
    return out;
  }
  throw ParseError(context + ": expected array or object", "", 0);
}

}  // namespace

irt::CalibrationConfig calibration_from_json(const json& j) {
  irt::CalibrationConfig c;
  maybe(j, "min_students_per_concept", c.min_students_per_concept);
  maybe(j, "min_responses_per_student", c.min_responses_per_student);
  maybe(j, "min_responses_per_item", c.min_responses_per_item);
  maybe(j, "quadrature_points", c.quadrature_points);
  maybe(j, "quadrature_min", c.quadrature_min);
  maybe(j, "quadrature_max", c.quadrature_max);
  maybe(j, "alpha_min", c.alpha_min);
  maybe(j, "alpha_max", c.alpha_max);
  maybe(j, "delta_min", c.delta_min);
  maybe(j, "delta_max", c.delta_max);
  maybe(j, "convergence_tol", c.convergence_tol);
  maybe(j, "max_em_iterations", c.max_em_iterations);
  maybe(j, "max_mstep_iterations", c.max_mstep_iterations);
  c.validate();
  return c;
}

irt::FlagThresholds thresholds_from_json(const json& j) {
  irt::FlagThresholds t;
  maybe(j, "disc_threshold", t.disc_threshold);
  maybe(j, "low_diff_threshold", t.low_diff_threshold);
  maybe(j, "high_diff_threshold", t.high_diff_threshold);
  t.validate();
  return t;
}

iwf::DetectorConfig detector_from_json(const json& j) {
  iwf::DetectorConfig c;
  if (j.contains("absolute_terms"))
    c.absolute_terms = j.at("absolute_terms").get<std::set<std::string>>();
  if (j.contains("vague_terms")) c.vague_terms = j.at("vague_terms").get<std::set<std::string>>();
  if (j.contains("negation_markers"))
    c.negation_markers = j.at("negation_markers").get<std::set<std::string>>();
  maybe(j, "longest_option_ratio", c.longest_option_ratio);
  maybe(j, "blank_marker_min_run", c.blank_marker_min_run);
  maybe(j, "convergence_overlap_min", c.convergence_overlap_min);
  if (j.contains("verifier")) {
    const auto& v = j.at("verifier");
    maybe(v, "enabled", c.verifier.enabled);
    maybe(v, "url", c.verifier.url);
    maybe(v, "api_key", c.verifier.api_key);
    maybe(v, "timeout_seconds", c.verifier.timeout_seconds);
    maybe(v, "max_retries", c.verifier.max_retries);
    maybe(v, "max_in_flight", c.verifier.max_in_flight);
  }
  c.validate();
  return c;
}

sim::SimConfig sim_from_json(const json& j) {
  sim::SimConfig c;
  maybe(j, "n_concepts", c.n_concepts);
  maybe(j, "items_per_concept", c.items_per_concept);
  maybe(j, "students_per_concept", c.students_per_concept);
  maybe(j, "response_rate", c.response_rate);
  maybe(j, "alpha_base_log_mean", c.alpha_base_log_mean);
  maybe(j, "alpha_base_log_sd", c.alpha_base_log_sd);
  maybe(j, "delta_base_mean", c.delta_base_mean);
  maybe(j, "delta_base_sd", c.delta_base_sd);
  maybe(j, "emit_text", c.emit_text);
  maybe(j, "seed", c.seed);
  if (j.contains("flaw_prevalence"))
    c.flaw_prevalence = vector19(j.at("flaw_prevalence"), "flaw_prevalence");
  if (j.contains("effect_on_delta"))
    c.effect_on_delta = vector19(j.at("effect_on_delta"), "effect_on_delta");
  if (j.contains("effect_on_alpha"))
    c.effect_on_alpha = vector19(j.at("effect_on_alpha"), "effect_on_alpha");
  if (j.contains("interactions")) {
    for (const auto& entry : j.at("interactions")) {
      sim::InteractionEffect e;
      const auto a = criterion_from_string(entry.at("first").get<std::string>());
      const auto b = criterion_from_string(entry.at("second").get<std::string>());
      if (!a || !b) throw ParseError("interactions: unknown criterion name", "", 0);
      e.first = *a;
      e.second = *b;
      if (entry.contains("on_delta")) e.on_delta = entry.at("on_delta").get<double>();
      if (entry.contains("on_alpha")) e.on_alpha = entry.at("on_alpha").get<double>();
      c.interactions.push_back(e);
    }
  }
  c.validate();
  return c;
}

ordered_json calibration_to_json(const irt::CalibrationConfig& c) {
  return ordered_json{{"min_students_per_concept", c.min_students_per_concept},
                      {"min_responses_per_student", c.min_responses_per_student},
                      {"min_responses_per_item", c.min_responses_per_item},
                      {"quadrature_points", c.quadrature_points},
                      {"quadrature_min", c.quadrature_min},
                      {"quadrature_max", c.quadrature_max},
                      {"alpha_min", c.alpha_min},
                      {"alpha_max", c.alpha_max},
                      {"delta_min", c.delta_min},
                      {"delta_max", c.delta_max},
                      {"convergence_tol", c.convergence_tol},
                      {"max_em_iterations", c.max_em_iterations},
                      {"max_mstep_iterations", c.max_mstep_iterations}};
}

ordered_json thresholds_to_json(const irt::FlagThresholds& t) {
  return ordered_json{{"disc_threshold", t.disc_threshold},
                      {"low_diff_threshold", t.low_diff_threshold},
                      {"high_diff_threshold", t.high_diff_threshold}};
}

ordered_json detector_to_json(const iwf::DetectorConfig& c) {
  return ordered_json{{"absolute_terms", c.absolute_terms},
                      {"vague_terms", c.vague_terms},
                      {"negation_markers", c.negation_markers},
                      {"longest_option_ratio", c.longest_option_ratio},
                      {"blank_marker_min_run", c.blank_marker_min_run},
                      {"convergence_overlap_min", c.convergence_overlap_min},
                      {"verifier",
                       ordered_json{{"enabled", c.verifier.enabled},
                                    {"url", c.verifier.url},
                                    {"timeout_seconds", c.verifier.timeout_seconds},
                                    {"max_retries", c.verifier.max_retries},
                                    {"max_in_flight", c.verifier.max_in_flight}}}};
}

ordered_json sim_to_json(const sim::SimConfig& c) {
  ordered_json prevalence = ordered_json::array();
  ordered_json on_delta = ordered_json::array();
  ordered_json on_alpha = ordered_json::array();
  for (int i = 0; i < kCriterionCount; ++i) {
    prevalence.push_back(c.flaw_prevalence[static_cast<std::size_t>(i)]);
    on_delta.push_back(c.effect_on_delta[static_cast<std::size_t>(i)]);
    on_alpha.push_back(c.effect_on_alpha[static_cast<std::size_t>(i)]);
  }
  ordered_json interactions = ordered_json::array();
  for (const auto& e : c.interactions) {
    interactions.push_back(ordered_json{{"first", itemgauge::to_string(e.first)},
                                        {"second", itemgauge::to_string(e.second)},
                                        {"on_delta", e.on_delta},
                                        {"on_alpha", e.on_alpha}});
  }
  return ordered_json{{"n_concepts", c.n_concepts},
                      {"items_per_concept", c.items_per_concept},
                      {"students_per_concept", c.students_per_concept},
                      {"response_rate", c.response_rate},
                      {"alpha_base_log_mean", c.alpha_base_log_mean},
                      {"alpha_base_log_sd", c.alpha_base_log_sd},
                      {"delta_base_mean", c.delta_base_mean},
                      {"delta_base_sd", c.delta_base_sd},
                      {"flaw_prevalence", std::move(prevalence)},
                      {"effect_on_delta", std::move(on_delta)},
                      {"effect_on_alpha", std::move(on_alpha)},
                      {"interactions", std::move(interactions)},
                      {"emit_text", c.emit_text},
                      {"seed", c.seed}};
}

nlohmann::json load_config_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": invalid JSON config: " + e.what(), path.string(), 0);
  }
}

}  // namespace itemgauge::io
