#pragma once

#include <filesystem>
#include <map>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "itemgauge/irt.hpp"
#include "itemgauge/iwf.hpp"
#include "itemgauge/sim.hpp"
#include "itemgauge/stats.hpp"
#include "itemgauge/types.hpp"

namespace itemgauge::io {

using ordered_json = nlohmann::ordered_json;

// Floating-point serialization for CSV outputs: 6 significant digits,
// round-trip stable (parse + re-format is a fixed point).
std::string format_number(double v);

// ---------------------------------------------------------------------------
// items.jsonl
// ---------------------------------------------------------------------------
std::vector<Mcq> read_items_jsonl(const std::filesystem::path& path);
void write_items_jsonl(const std::filesystem::path& path, const std::vector<Mcq>& items);

// ---------------------------------------------------------------------------
// responses.csv (header: student_id,item_id,outcome)
// ---------------------------------------------------------------------------
std::vector<ResponseRecord> read_responses_csv(const std::filesystem::path& path);
void write_responses_csv(const std::filesystem::path& path,
                         const std::vector<ResponseRecord>& records);
void write_responses_csv(const std::filesystem::path& path,
                         const std::vector<ResponseMatrix>& matrices);

// Groups records into per-concept matrices using the item -> concept map.
// First occurrence wins for duplicate (student, item) pairs; duplicates are
// reported. Records referencing unknown items raise ParseError.
struct BuiltMatrices {
  std::vector<ResponseMatrix> matrices;  // sorted by concept_id
  irt::ExclusionReport duplicates;
};
BuiltMatrices build_matrices(const std::vector<ResponseRecord>& records,
                             const std::map<std::string, std::string>& item_to_concept);

// ---------------------------------------------------------------------------
// params.csv (header: item_id,concept_id,alpha,delta,n_responses,flags)
// ---------------------------------------------------------------------------
struct ParamsRow {
  IrtItemParams params;
  std::string concept_id;
};
std::vector<ParamsRow> read_params_csv(const std::filesystem::path& path);
void write_params_csv(const std::filesystem::path& path, const std::vector<ParamsRow>& rows);

void write_exclusions_csv(const std::filesystem::path& path, const irt::ExclusionReport& report);

// ---------------------------------------------------------------------------
// flaws.jsonl + summary.json
// ---------------------------------------------------------------------------
std::vector<IwfAnnotation> read_flaws_jsonl(const std::filesystem::path& path);
void write_flaws_jsonl(const std::filesystem::path& path,
                       const std::vector<IwfAnnotation>& annotations);
ordered_json summary_to_json(const iwf::BankSummary& summary);

// Analysis report sections. Every p-value entry carries raw and adjusted
// values plus its family identifier.
ordered_json rq1_to_json(const stats::Rq1Report& report);
ordered_json rq2_to_json(const stats::Rq2Report& report);

// ---------------------------------------------------------------------------
// ground_truth.json
// ---------------------------------------------------------------------------
void write_ground_truth(const std::filesystem::path& path, const sim::GroundTruth& truth);
sim::GroundTruth read_ground_truth(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Run manifest
// ---------------------------------------------------------------------------
struct RunManifest {
  std::string command;
  ordered_json config;
  std::map<std::string, std::string> input_digests;  // path (as given) -> sha256
  std::uint64_t master_seed = 0;
  std::string tool_version{kVersion};
  std::string created_utc;  // honors SOURCE_DATE_EPOCH for reproducible runs
};

std::string sha256_file(const std::filesystem::path& path);
std::string current_timestamp_utc();
void write_manifest(const std::filesystem::path& out_dir, const RunManifest& manifest);

// Config file handling: a single JSON document with optional sections
// "calibration", "thresholds", "detector", "sim".
irt::CalibrationConfig calibration_from_json(const nlohmann::json& j);
irt::FlagThresholds thresholds_from_json(const nlohmann::json& j);
iwf::DetectorConfig detector_from_json(const nlohmann::json& j);
sim::SimConfig sim_from_json(const nlohmann::json& j);

ordered_json calibration_to_json(const irt::CalibrationConfig& c);
ordered_json thresholds_to_json(const irt::FlagThresholds& t);
ordered_json detector_to_json(const iwf::DetectorConfig& c);
ordered_json sim_to_json(const sim::SimConfig& c);

nlohmann::json load_config_file(const std::filesystem::path& path);

}  // namespace itemgauge::io
