// ctishare: command-line front end over the library. Exit status is 0 on
// success (including a validation that reports FAIL), 1 on a domain error and
// 2 on a usage error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ctishare/bench.hpp"
#include "ctishare/error.hpp"
#include "ctishare/scenario.hpp"
#include "ctishare/workspace.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace ctishare;

namespace {

struct Globals {
  std::string home;
  std::string store;
  std::string ledger;
  std::string gas_model;
  std::optional<std::uint64_t> seed;
  bool json = false;
};

WorkspaceOptions options_from(const Globals& g) {
  WorkspaceOptions o;
  o.home = g.home;
  if (!g.store.empty()) o.store_root = g.store;
  if (!g.ledger.empty()) o.ledger_path = g.ledger;
  if (!g.gas_model.empty()) o.gas_model = gas_model_from_string(g.gas_model);
  o.seed = g.seed;
  return o;
}

ordered_json read_json(const fs::path& path) {
  auto bytes = read_file(path);
  try {
    return ordered_json::parse(bytes.begin(), bytes.end());
  } catch (const ordered_json::parse_error& e) {
    throw Error(ErrorCode::SchemaError, path.string() + ": " + e.what());
  }
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    write_file_atomic(path, as_view(text));
  }
}

std::string levels_text(const std::set<int>& levels) {
  std::string out = "{";
  for (int l : levels) out += (out.size() > 1 ? "," : "") + std::to_string(l);
  return out + "}";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differential CTI sharing: shares, requests, responses and validation"};
  app.require_subcommand(1);

  Globals g;
  const char* env_home = std::getenv("CTISHARE_HOME");
  g.home = env_home ? env_home : ".ctishare";
  app.add_option("--home", g.home, "Workspace directory")->capture_default_str();
  app.add_option("--store", g.store, "Content store root (default <home>/store)");
  app.add_option("--ledger", g.ledger, "Ledger file (default <home>/ledger.jsonl)");
  app.add_option("--gas-model", g.gas_model, "calibrated | linear")
      ->check(CLI::IsMember({"calibrated", "linear"}));
  app.add_option("--seed", g.seed, "Deterministic keys, nonces and seals");
  app.add_flag("--json", g.json, "Machine-readable output");

  std::string org_id;
  auto add_org = [&](CLI::App* cmd) { cmd->add_option("--org", org_id, "Organisation id")->required(); };

  auto* keygen_cmd = app.add_subcommand("keygen", "Create an organisation key pair");
  add_org(keygen_cmd);

  auto* register_cmd = app.add_subcommand("register", "Register an organisation's key on the ledger");
  add_org(register_cmd);

  auto* issuer_cmd = app.add_subcommand("issuer", "Credential issuers");
  issuer_cmd->require_subcommand(1);
  std::string issuer_id;
  auto* issuer_create = issuer_cmd->add_subcommand("create", "Create a trusted issuer key");
  issuer_create->add_option("--id", issuer_id)->required();

  auto* cred_cmd = app.add_subcommand("credential", "Signed attribute credentials");
  cred_cmd->require_subcommand(1);
  std::string attrs_file, out_file;
  auto* cred_issue = cred_cmd->add_subcommand("issue", "Sign attributes for an organisation");
  cred_issue->add_option("--issuer", issuer_id)->required();
  add_org(cred_issue);
  cred_issue->add_option("--attrs", attrs_file, "JSON object of attributes")->required()->check(CLI::ExistingFile);
  cred_issue->add_option("--out", out_file, "Output file (default stdout)");

  std::string bundle_file, policy_file, scheme_name, creds_file;
  std::uint64_t share_id = 0, request_id = 0;
  auto* share_cmd = app.add_subcommand("share", "Segment, hash and publish a bundle");
  add_org(share_cmd);
  share_cmd->add_option("--bundle", bundle_file)->required()->check(CLI::ExistingFile);
  share_cmd->add_option("--policy", policy_file)->required()->check(CLI::ExistingFile);
  share_cmd->add_option("--scheme", scheme_name)->required()->check(CLI::IsMember({"single", "multi"}));

  auto* request_cmd = app.add_subcommand("request", "Request a share with sealed credentials");
  add_org(request_cmd);
  request_cmd->add_option("--share", share_id)->required();
  request_cmd->add_option("--creds", creds_file)->required()->check(CLI::ExistingFile);

  auto* respond_cmd = app.add_subcommand("respond", "Evaluate a request and respond");
  add_org(respond_cmd);
  respond_cmd->add_option("--request", request_id)->required();

  auto* validate_cmd = app.add_subcommand("validate", "Open a response and validate it");
  add_org(validate_cmd);
  validate_cmd->add_option("--request", request_id)->required();

  auto* scenario_cmd = app.add_subcommand("scenario", "Multi-organisation scenarios");
  scenario_cmd->require_subcommand(1);
  std::string config_file, transcript_file;
  auto* scenario_run = scenario_cmd->add_subcommand("run", "Run a scenario config");
  scenario_run->add_option("config", config_file)->required()->check(CLI::ExistingFile);
  scenario_run->add_option("--out", transcript_file, "Transcript file (default stdout)");

  auto* bench_cmd = app.add_subcommand("bench", "Integrity-hash benchmarks");
  bench_cmd->require_subcommand(1);
  std::string matrix_file, csv_file;
  std::optional<int> iterations;
  auto* bench_run = bench_cmd->add_subcommand("run", "Run a benchmark matrix");
  bench_run->add_option("--matrix", matrix_file)->required()->check(CLI::ExistingFile);
  bench_run->add_option("--out", csv_file, "CSV file (default stdout)");
  bench_run->add_option("--iterations", iterations, "Override the matrix iteration count")
      ->check(CLI::PositiveNumber);

  auto* ledger_cmd = app.add_subcommand("ledger", "Ledger inspection");
  ledger_cmd->require_subcommand(1);
  auto* ledger_inspect = ledger_cmd->add_subcommand("inspect", "Print records and events");
  ledger_inspect->add_flag("--json", g.json, "Print the JSON-lines export");

  auto* store_cmd = app.add_subcommand("store", "Content store maintenance");
  store_cmd->require_subcommand(1);
  auto* store_audit = store_cmd->add_subcommand("audit", "Recompute every object's digest");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (scenario_run->parsed()) {
      auto config = load_scenario(config_file);
      if (g.seed) config.seed = g.seed;
      if (!g.gas_model.empty()) config.gas_model = gas_model_from_string(g.gas_model);
      fs::path store_root = g.store.empty() ? fs::path(g.home) / "scenario-store" : fs::path(g.store);
      auto transcript = run_scenario(config, store_root);
      write_output(transcript_file, transcript.to_jsonl());
      if (!transcript_file.empty() && transcript_file != "-") {
        std::cerr << "transcript written to " << transcript_file << "\n";
      }
      return 0;
    }
    if (bench_run->parsed()) {
      auto matrix = load_matrix(matrix_file);
      if (iterations) {
        for (auto& c : matrix.cases) c.iterations = *iterations;
      }
      auto report = run_matrix(matrix);
      write_output(csv_file, report.to_csv());
      for (const auto& f : report.failures()) std::cerr << "check failed: " << f << "\n";
      std::cerr << report.rows.size() << " rows in " << report.wall_seconds << " s\n";
      return 0;
    }

    Workspace ws(options_from(g));
    auto env = ws.environment();

    if (keygen_cmd->parsed()) {
      auto keys = ws.create_org_keys(org_id);
      auto address = Address::from_public_key(keys.public_key).str();
      if (g.json) {
        std::cout << ordered_json{{"org", org_id}, {"address", address}, {"key_id", keys.key_id}}.dump() << "\n";
      } else {
        std::cout << org_id << " " << address << " key_id=" << keys.key_id << "\n";
      }
    } else if (register_cmd->parsed()) {
      auto org = ws.load_org(org_id);
      org.register_on(ws.ledger());
      ws.commit();
      std::cout << "registered " << org_id << " " << org.address().str() << "\n";
    } else if (issuer_create->parsed()) {
      auto issuer = ws.create_issuer(issuer_id);
      std::cout << "issuer " << issuer_id << " " << to_hex(issuer.public_key) << "\n";
    } else if (cred_issue->parsed()) {
      auto issuer = ws.load_issuer(issuer_id);
      auto creds = credentials_from_json(
          ordered_json{{"org_id", org_id}, {"issuer_id", issuer_id}, {"attributes", read_json(attrs_file)}});
      sign_credentials(creds, issuer);
      write_output(out_file, to_json(creds).dump(2) + "\n");
    } else if (share_cmd->parsed()) {
      auto org = ws.load_org(org_id);
      auto bundle = load_bundle(bundle_file);
      auto policy = load_policy(policy_file);
      auto id = produce_share(org, env, bundle, policy, scheme_from_string(scheme_name));
      ws.save_producer_state(org_id, *org.data().share(id));
      ws.commit();
      if (g.json) {
        std::cout << ordered_json{{"share_id", id}, {"cid", org.data().share(id)->cid_public.str()}}.dump() << "\n";
      } else {
        std::cout << "share " << id << " " << org.data().share(id)->cid_public.str() << "\n";
      }
    } else if (request_cmd->parsed()) {
      auto org = ws.load_org(org_id);
      auto creds = credentials_from_json(read_json(creds_file));
      auto id = submit_request(org, env, share_id, creds);
      ws.commit();
      if (g.json) {
        std::cout << ordered_json{{"request_id", id}}.dump() << "\n";
      } else {
        std::cout << "request " << id << "\n";
      }
    } else if (respond_cmd->parsed()) {
      auto org = ws.load_org(org_id);
      auto decision = process_request(org, env, request_id);
      ws.commit();
      if (g.json) {
        std::cout << ordered_json{{"request_id", request_id},
                                  {"granted", decision.grant.levels},
                                  {"matched_rule", decision.grant.matched_rule.value_or("")},
                                  {"credentials_verified", decision.credentials_verified}}
                         .dump()
                  << "\n";
      } else {
        std::cout << "respond " << request_id << " granted=" << levels_text(decision.grant.levels);
        if (!decision.credentials_verified) std::cout << " credentials rejected: " << decision.failure;
        std::cout << "\n";
      }
    } else if (validate_cmd->parsed()) {
      auto org = ws.load_org(org_id);
      auto report = consume_response(org, env, request_id);
      if (g.json) {
        ordered_json verdicts = ordered_json::array();
        for (const auto& v : report.verdicts) verdicts.push_back({{"index", v.index}, {"pass", v.pass}});
        std::cout << ordered_json{{"request_id", request_id},
                                  {"result", report.pass ? "PASS" : "FAIL"},
                                  {"comparisons", report.comparisons_performed},
                                  {"verdicts", verdicts}}
                         .dump()
                  << "\n";
      } else {
        std::cout << (report.pass ? "PASS" : "FAIL") << " request " << request_id
                  << " comparisons=" << report.comparisons_performed;
        for (const auto& v : report.verdicts) std::cout << " " << v.index << (v.pass ? ":ok" : ":bad");
        std::cout << "\n";
      }
    } else if (ledger_inspect->parsed()) {
      if (g.json) {
        std::cout << ws.ledger().export_jsonl();
      } else {
        const auto& ledger = ws.ledger();
        std::cout << "gas model " << to_string(ledger.gas_model()) << ", " << ledger.shares().size()
                  << " shares, " << ledger.requests().size() << " requests, "
                  << ledger.response_count() << " responses, total gas " << ledger.total_gas() << "\n";
        for (const auto& ev : ledger.events_since(0)) {
          std::cout << ev.sequence << " " << to_string(ev.type) << " share=" << ev.share_id;
          if (ev.request_id) std::cout << " request=" << ev.request_id;
          std::cout << " actor=" << ev.actor.str() << " cid=" << ev.cid.str() << " gas=" << ev.gas_used << "\n";
        }
      }
    } else if (store_audit->parsed()) {
      auto findings = ws.store().audit();
      for (const auto& f : findings) std::cout << "MISMATCH " << f.cid.str() << " " << f.problem << "\n";
      std::cout << "audit " << ws.store().size() << " objects, " << findings.size() << " mismatches\n";
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
