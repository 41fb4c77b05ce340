#include <string>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "itemgauge/iwf.hpp"

namespace itemgauge::iwf {

namespace {

struct ParsedUrl {
  std::string scheme_host_port;  // what httplib::Client takes
  std::string path;
};

ParsedUrl parse_url(const std::string& url) {
  ParsedUrl out;
  auto scheme_end = url.find("://");
  std::size_t path_start;
  if (scheme_end == std::string::npos) {
    path_start = url.find('/');
  } else {
    path_start = url.find('/', scheme_end + 3);
  }
  if (path_start == std::string::npos) {
    out.scheme_host_port = url;
    out.path = "/";
  } else {
    out.scheme_host_port = url.substr(0, path_start);
    out.path = url.substr(path_start);
  }
  return out;
}

}  // namespace

VerifierVerdict verify_external(const Mcq& item, Criterion criterion,
                                const VerifierConfig& config) {
  if (!config.enabled || config.url.empty())
    throw VerifierUnavailable("external verifier is not configured");

  const ParsedUrl url = parse_url(config.url);
  nlohmann::json request{{"stem", item.stem},
                         {"options", item.options},
                         {"correct_index", item.correct_index},
                         {"criterion_name", to_string(criterion)},
                         {"criterion_definition", criterion_definition(criterion)}};
  const std::string body = request.dump();

  const int attempts = 1 + std::max(0, config.max_retries);
  std::string last_error = "no attempt made";
  for (int attempt = 0; attempt < attempts; ++attempt) {
    httplib::Client client(url.scheme_host_port);
    client.set_connection_timeout(config.timeout_seconds, 0);
    client.set_read_timeout(config.timeout_seconds, 0);
    client.set_write_timeout(config.timeout_seconds, 0);
    httplib::Headers headers;
    if (!config.api_key.empty()) {
      headers.emplace("Authorization", "Bearer " + config.api_key);
    }
    auto response = client.Post(url.path, headers, body, "application/json");
    if (!response) {
      last_error = "transport error: " + httplib::to_string(response.error());
      continue;
    }
    if (response->status != 200) {
      last_error = "http status " + std::to_string(response->status);
      continue;
    }
    try {
      const auto parsed = nlohmann::json::parse(response->body);
      VerifierVerdict verdict;
      verdict.flagged = parsed.at("flagged").get<bool>();
      if (parsed.contains("rationale")) verdict.rationale = parsed["rationale"].get<std::string>();
      return verdict;
    } catch (const nlohmann::json::exception& e) {
      last_error = std::string("malformed response: ") + e.what();
    }
  }
  throw VerifierUnavailable("verifier request failed for " + item.item_id + "/" +
                            to_string(criterion) + ": " + last_error);
}

}  // namespace itemgauge::iwf
