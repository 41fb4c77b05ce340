#include "itemgauge/sim.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>

#include "itemgauge/irt.hpp"
#include "itemgauge/rng.hpp"

namespace itemgauge::sim {

namespace {

constexpr std::uint64_t kStreamBank = 0xBA17ull;
constexpr std::uint64_t kStreamAbility = 0xAB11ull;
constexpr std::uint64_t kStreamResponse = 0x4E59ull;

std::string concept_name(int c) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "c%04d", c);
  return buf;
}

std::string item_name(int c, int i) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "c%04d_i%02d", c, i);
  return buf;
}

std::string student_name(int c, int s) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "c%04d_s%05d", c, s);
  return buf;
}

// Small word banks for templated item text. Chosen to stay clear of the
// detector lexicons and of each other's content words.
const std::vector<std::string>& topics() {
  static const std::vector<std::string> v{
      "photosynthesis", "magnetism",  "erosion",    "evaporation", "gravity",
      "friction",       "respiration", "convection", "refraction",  "weathering",
      "condensation",   "pollination", "migration",  "digestion",   "germination"};
  return v;
}

struct OptionWords {
  const char* adjective;
  const char* noun;
};

const std::vector<OptionWords>& option_words() {
  static const std::vector<OptionWords> v{
      {"rapid", "heating"},   {"slow", "cooling"},     {"dense", "layering"},
      {"bright", "glowing"},  {"steady", "spreading"}, {"gradual", "sinking"},
      {"sudden", "melting"},  {"uneven", "mixing"},    {"smooth", "sliding"},
      {"sharp", "bending"},   {"gentle", "rising"},    {"deep", "settling"},
      {"quick", "freezing"},  {"broad", "drifting"},   {"faint", "shimmering"},
      {"coarse", "grinding"},
  };
  return v;
}

Mcq base_item(int concept_idx, int item_idx, const std::string& item_id,
              const std::string& concept_id, Domain domain) {
  Mcq mcq;
  mcq.item_id = item_id;
  mcq.concept_id = concept_id;
  mcq.domain = domain;
  const auto& topic = topics()[static_cast<std::size_t>(concept_idx * 7 + item_idx) % topics().size()];
  mcq.stem = "Which statement about " + topic + " is accurate?";
  const auto& words = option_words();
  const std::size_t base = static_cast<std::size_t>(concept_idx * 3 + item_idx) % words.size();
  for (int k = 0; k < 4; ++k) {
    const auto& w = words[(base + static_cast<std::size_t>(k) * 2 + 1) % words.size()];
    mcq.options.push_back(std::string("a process of ") + w.adjective + " " + w.noun);
  }
  mcq.correct_index = item_idx % 4;
  return mcq;
}

// Rewrites item text so the given flaw is present. Multi-flaw items compose
// best effort; each individual flaw template is detector-positive on its own.
void apply_flaw_text(Mcq& mcq, Criterion c) {
  const auto correct = static_cast<std::size_t>(mcq.correct_index);
  auto distractor = [&](std::size_t k) {
    // k-th distractor index
    std::size_t idx = 0, seen = 0;
    for (std::size_t i = 0; i < mcq.options.size(); ++i) {
      if (i == correct) continue;
      if (seen++ == k) {
        idx = i;
        break;
      }
    }
    return idx;
  };
  switch (c) {
    case Criterion::LostSequence:
      mcq.options = {"12", "3", "7", "9"};
      mcq.correct_index = 2;
      break;
    case Criterion::TrueFalseQuestion:
      mcq.options = {"True for the first case", "False for the first case",
                     "True for the second case", "False for the second case"};
      mcq.correct_index = 0;
      break;
    case Criterion::ComplexKType:
      mcq.options = {"A and B", "B and C", "A and C", "A and D"};
      mcq.correct_index = 0;
      break;
    case Criterion::LogicalCues:
      mcq.stem = "Which statement about the water cycle is accurate?";
      mcq.options = {"the water cycle", "the water table near rock", "a cycle of rock seasons",
                     "the dry lake bed"};
      mcq.correct_index = 0;
      break;
    case Criterion::GrammaticalCues:
      mcq.stem = "The direct result of this process is an";
      mcq.options = {"orbit around the core", "path through the crust", "wave beyond the coast",
                     "flow inside the mantle"};
      mcq.correct_index = 0;
      break;
    case Criterion::ConvergenceCues:
      mcq.options = {"green energy capture", "green light bending", "loud sound waves",
                     "dry heat flow"};
      mcq.correct_index = 0;
      break;
    case Criterion::WordRepeats: {
      mcq.stem = "Which statement about magnetism is accurate?";
      mcq.options = {"strong magnetism in coils", "a pull between wires", "a push on the needle",
                     "a spin of the compass"};
      mcq.correct_index = 0;
      break;
    }
    case Criterion::ImplausibleDistractors:
      mcq.options[distractor(0)] = "fog";
      break;
    case Criterion::LongestOptionCorrect: {
      std::size_t max_len = 0;
      for (std::size_t i = 0; i < mcq.options.size(); ++i) {
        if (i != correct) max_len = std::max(max_len, mcq.options[i].size());
      }
      std::string& text = mcq.options[correct];
      while (text.size() < static_cast<std::size_t>(1.6 * static_cast<double>(max_len)) + 1) {
        text += " that unfolds across linked stages";
      }
      break;
    }
    case Criterion::AbsoluteTerms:
      mcq.options[distractor(0)] = "a flow that always rises";
      break;
    case Criterion::VagueTerms:
      mcq.options[distractor(1)] = "a pattern seen sometimes in autumn";
      break;
    case Criterion::MoreThanOneCorrect: {
      // Case/whitespace variant: distinct raw strings, equal once normalized.
      std::string dup = mcq.options[correct];
      if (!dup.empty()) dup[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(dup[0])));
      mcq.options[distractor(0)] = dup + " ";
      break;
    }
    case Criterion::NoneOfTheAbove:
      mcq.options.push_back("None of the above");
      break;
    case Criterion::AllOfTheAbove:
      mcq.options.push_back("All of the above");
      break;
    case Criterion::UnfocusedStem:
      mcq.stem = "The layers of the planet.";
      break;
    case Criterion::FillInTheBlank:
      mcq.stem = "The ____ behind this process is the main driver of each season.";
      break;
    case Criterion::AmbiguousUnclear:
      mcq.stem = "They shape the outcome here. " + mcq.stem;
      break;
    case Criterion::GratuitousInformation:
      mcq.stem = "The sky stayed calm that morning. A mild wind crossed the valley. " + mcq.stem;
      break;
    case Criterion::NegativeWording:
      mcq.stem += " Choose the option that is NOT involved.";
      break;
  }
}

// Application order: whole-option rewrites first, then single-option tweaks,
// then stem edits, then appended options.
const std::vector<Criterion>& flaw_application_order() {
  static const std::vector<Criterion> order{
      Criterion::LostSequence,        Criterion::TrueFalseQuestion,
      Criterion::ComplexKType,        Criterion::LogicalCues,
      Criterion::GrammaticalCues,     Criterion::ConvergenceCues,
      Criterion::WordRepeats,         Criterion::ImplausibleDistractors,
      Criterion::LongestOptionCorrect, Criterion::AbsoluteTerms,
      Criterion::VagueTerms,          Criterion::MoreThanOneCorrect,
      Criterion::UnfocusedStem,       Criterion::FillInTheBlank,
      Criterion::AmbiguousUnclear,    Criterion::GratuitousInformation,
      Criterion::NegativeWording,     Criterion::NoneOfTheAbove,
      Criterion::AllOfTheAbove,
  };
  return order;
}

}  // namespace

std::array<double, kCriterionCount> default_flaw_prevalence() {
  std::array<double, kCriterionCount> p{};
  p.fill(0.05);
  p[static_cast<std::size_t>(Criterion::AmbiguousUnclear)] = 0.313;
  p[static_cast<std::size_t>(Criterion::FillInTheBlank)] = 0.224;
  p[static_cast<std::size_t>(Criterion::MoreThanOneCorrect)] = 0.141;
  p[static_cast<std::size_t>(Criterion::NoneOfTheAbove)] = 0.125;
  p[static_cast<std::size_t>(Criterion::LostSequence)] = 0.101;
  return p;
}

std::array<double, kCriterionCount> default_effect_on_delta() {
  std::array<double, kCriterionCount> e{};
  e.fill(0.0);
  e[static_cast<std::size_t>(Criterion::MoreThanOneCorrect)] = -0.715;
  e[static_cast<std::size_t>(Criterion::LongestOptionCorrect)] = -0.437;
  e[static_cast<std::size_t>(Criterion::AllOfTheAbove)] = -0.364;
  e[static_cast<std::size_t>(Criterion::ConvergenceCues)] = 0.579;
  return e;
}

std::array<double, kCriterionCount> default_effect_on_alpha() {
  std::array<double, kCriterionCount> e{};
  e.fill(0.0);
  e[static_cast<std::size_t>(Criterion::MoreThanOneCorrect)] = -0.317;
  e[static_cast<std::size_t>(Criterion::LongestOptionCorrect)] = -0.216;
  e[static_cast<std::size_t>(Criterion::AllOfTheAbove)] = -0.101;
  e[static_cast<std::size_t>(Criterion::LostSequence)] = 0.314;
  return e;
}

void SimConfig::validate() const {
  if (n_concepts < 1 || items_per_concept < 1 || students_per_concept < 1)
    throw DegenerateInput("sim config: counts must be >= 1");
  if (!(response_rate >= 0.0 && response_rate <= 1.0))
    throw DegenerateInput("sim config: response_rate must be in [0,1]");
  if (!(alpha_base_log_sd >= 0.0) || !(delta_base_sd >= 0.0))
    throw DegenerateInput("sim config: distribution spreads must be non-negative");
  for (double p : flaw_prevalence) {
    if (!(p >= 0.0 && p <= 1.0))
      throw DegenerateInput("sim config: flaw prevalences must be in [0,1]");
  }
  for (double e : effect_on_delta) {
    if (!std::isfinite(e)) throw DegenerateInput("sim config: non-finite delta effect");
  }
  for (double e : effect_on_alpha) {
    if (!std::isfinite(e)) throw DegenerateInput("sim config: non-finite alpha effect");
  }
}

Bank generate_bank(const SimConfig& config) {
  config.validate();
  Bank bank;
  static const Domain domain_cycle[3] = {Domain::LifeEarth, Domain::Physical, Domain::Math};

  for (int c = 0; c < config.n_concepts; ++c) {
    const std::string concept_id = concept_name(c);
    const Domain domain = domain_cycle[c % 3];
    Rng item_rng(derive_seed(config.seed, kStreamBank, static_cast<std::uint64_t>(c)));
    for (int i = 0; i < config.items_per_concept; ++i) {
      TrueItem truth;
      truth.item_id = item_name(c, i);
      truth.concept_id = concept_id;
      for (int f = 0; f < kCriterionCount; ++f) {
        truth.flags[static_cast<std::size_t>(f)] =
            item_rng.bernoulli(config.flaw_prevalence[static_cast<std::size_t>(f)]);
      }
      const double base_alpha = item_rng.lognormal(config.alpha_base_log_mean, config.alpha_base_log_sd);
      const double base_delta = item_rng.normal(config.delta_base_mean, config.delta_base_sd);
      double alpha = base_alpha;
      double delta = base_delta;
      for (int f = 0; f < kCriterionCount; ++f) {
        if (truth.flags[static_cast<std::size_t>(f)]) {
          alpha += config.effect_on_alpha[static_cast<std::size_t>(f)];
          delta += config.effect_on_delta[static_cast<std::size_t>(f)];
        }
      }
      for (const auto& inter : config.interactions) {
        if (truth.flags[static_cast<std::size_t>(inter.first)] &&
            truth.flags[static_cast<std::size_t>(inter.second)]) {
          alpha += inter.on_alpha;
          delta += inter.on_delta;
        }
      }
      truth.alpha = std::max(0.05, alpha);
      truth.delta = delta;

      Mcq mcq = base_item(c, i, truth.item_id, concept_id, domain);
      if (config.emit_text) {
        for (Criterion crit : flaw_application_order()) {
          if (truth.flags[static_cast<std::size_t>(crit)]) apply_flaw_text(mcq, crit);
        }
      }
      bank.items.push_back(std::move(mcq));
      bank.truth.items.push_back(std::move(truth));
    }

    Rng ability_rng(derive_seed(config.seed, kStreamAbility, static_cast<std::uint64_t>(c)));
    for (int s = 0; s < config.students_per_concept; ++s) {
      bank.truth.students.push_back({student_name(c, s), concept_id, ability_rng.normal()});
    }
  }
  return bank;
}

std::vector<ResponseMatrix> simulate_responses(const GroundTruth& truth, const SimConfig& config) {
  config.validate();
  // Concepts in order of first appearance.
  std::vector<std::string> concept_order;
  std::map<std::string, std::size_t> concept_index;
  for (const auto& item : truth.items) {
    if (concept_index.emplace(item.concept_id, concept_order.size()).second) {
      concept_order.push_back(item.concept_id);
    }
  }

  std::vector<ResponseMatrix> matrices(concept_order.size());
  std::vector<std::vector<const TrueItem*>> concept_items(concept_order.size());
  std::vector<std::vector<const TrueStudent*>> concept_students(concept_order.size());
  for (const auto& item : truth.items) {
    concept_items[concept_index.at(item.concept_id)].push_back(&item);
  }
  for (const auto& student : truth.students) {
    const auto it = concept_index.find(student.concept_id);
    if (it != concept_index.end()) concept_students[it->second].push_back(&student);
  }

  for (std::size_t c = 0; c < concept_order.size(); ++c) {
    ResponseMatrix& m = matrices[c];
    m.concept_id = concept_order[c];
    for (const auto* item : concept_items[c]) m.item_ids.push_back(item->item_id);
    Rng rng(derive_seed(config.seed, kStreamResponse, static_cast<std::uint64_t>(c)));
    m.rows.reserve(concept_students[c].size());
    for (const auto* student : concept_students[c]) {
      m.student_ids.push_back(student->student_id);
      std::vector<std::pair<int, int>> row;
      for (std::size_t i = 0; i < concept_items[c].size(); ++i) {
        // Two draws per pair regardless of retention keeps the stream aligned
        // across response_rate settings.
        const double keep = rng.uniform();
        const double outcome_draw = rng.uniform();
        if (keep < config.response_rate) {
          const double p =
              irt::irf(student->theta, concept_items[c][i]->alpha, concept_items[c][i]->delta);
          row.emplace_back(static_cast<int>(i), outcome_draw < p ? 1 : 0);
        }
      }
      m.rows.push_back(std::move(row));
    }
  }
  return matrices;
}

}  // namespace itemgauge::sim
