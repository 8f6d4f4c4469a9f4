#include "gft/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace gft {

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitInvalid = 2;

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidInput("'" + path + "' is not valid JSON: " + e.what());
  }
}

BigRational param_value(const nlohmann::json& v) {
  if (v.is_string()) return parse_big_rational(v.get<std::string>());
  if (v.is_number_integer()) return BigRational(v.get<std::int64_t>());
  if (v.is_number()) return parse_big_rational(v.dump());
  throw InvalidInput("parameter values must be numbers or rational strings, got " + v.dump());
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

}  // namespace

OutputFormat parse_output_format(const std::string& text) {
  if (text == "table") return OutputFormat::Table;
  if (text == "csv") return OutputFormat::Csv;
  if (text == "json") return OutputFormat::Json;
  throw InvalidInput("unknown output format '" + text + "' (expected table, csv or json)");
}

Distribution parse_distribution_arg(const std::string& text) {
  if (text.empty()) throw InvalidInput("empty distribution");
  if (text.front() == '{') {
    try {
      return distribution_from_json(nlohmann::json::parse(text));
    } catch (const nlohmann::json::parse_error& e) {
      throw InvalidInput("bad distribution literal: " + std::string(e.what()));
    }
  }
  if (text.rfind("point:", 0) == 0) return Distribution::point_mass(Rational::parse(text.substr(6)));
  if (text.rfind("uniform:", 0) == 0) {
    const auto parts = split(text.substr(8), ':');
    if (parts.size() != 2) throw InvalidInput("expected uniform:<lo>:<hi>, got '" + text + "'");
    return Distribution::uniform(Rational::parse(parts[0]).to_double(), Rational::parse(parts[1]).to_double());
  }
  if (text.find('@') != std::string::npos) {
    std::vector<Atom> atoms;
    for (const auto& item : split(text, ',')) {
      const auto at = item.find('@');
      if (at == std::string::npos) throw InvalidInput("expected value@probability, got '" + item + "'");
      atoms.push_back({Rational::parse(item.substr(0, at)), parse_big_rational(item.substr(at + 1))});
    }
    return Distribution::discrete(std::move(atoms));
  }
  if (std::filesystem::exists(text)) return distribution_from_json(read_json_file(text));
  throw InvalidInput("cannot interpret distribution '" + text + "'");
}

RunConfig parse_run_config(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidInput("config must be a JSON object");
  RunConfig cfg;
  try {
    for (const auto& item : j.value("checks", nlohmann::json::array())) {
      CheckRequest req;
      req.id = item.is_string() ? item.get<std::string>() : item.at("id").get<std::string>();
      const Check& check = find_check(req.id);
      if (item.is_object() && item.contains("params")) {
        for (const auto& [k, v] : item.at("params").items()) req.overrides[k] = param_value(v);
      }
      resolve_params(check, req.overrides);
      cfg.checks.push_back(std::move(req));
    }
    for (const auto& item : j.value("markets", nlohmann::json::array())) {
      MarketJob job{{distribution_from_json(item.at("seller")), distribution_from_json(item.at("buyer")),
                     item.value("m_s", std::size_t{1}), item.value("m_b", std::size_t{1})},
                    {}};
      for (const auto& name : item.value("mechanisms", nlohmann::json::array({"btr"}))) {
        const auto n = name.get<std::string>();
        if (n != "opt") make_mechanism(n);
        job.mechanisms.push_back(n);
      }
      cfg.markets.push_back(std::move(job));
    }
    if (j.contains("mc")) {
      const auto& mc = j.at("mc");
      cfg.mc_n = mc.value("n", std::uint64_t{1000000});
      if (!mc.contains("seed")) throw InvalidInput("mc.seed is required");
      cfg.mc_seed = mc.at("seed").get<std::uint64_t>();
    }
    if (j.contains("output")) {
      const auto& o = j.at("output");
      cfg.format = parse_output_format(o.value("format", std::string("table")));
      cfg.output_path = o.value("path", std::string());
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("malformed config: ") + e.what());
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) { return parse_run_config(read_json_file(path)); }

namespace {

/// Writes to the --output file when given, else to the console stream.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : out_(&fallback) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw InvalidInput("cannot write '" + path + "'");
      out_ = &file_;
    }
  }
  std::ostream& stream() { return *out_; }

 private:
  std::ofstream file_;
  std::ostream* out_;
};

// Long exact values collapse to a decimal in the table; CSV and JSON keep them.
std::string cell(const Expectation& e) {
  std::string s = e.str();
  if (e.is_exact() && s.size() > 24) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "~%.6g", e.value());
    s = buf;
  }
  return s;
}

// Pads by code points so the two-byte plus-minus sign does not skew columns.
std::string pad(const std::string& s, std::size_t width) {
  std::size_t shown = 0;
  for (unsigned char c : s) shown += (c & 0xC0) != 0x80;
  return s + std::string(shown + 2 > width ? 2 : width - shown, ' ');
}

void print_check_table(std::ostream& os, const std::vector<CheckResult>& results) {
  os << pad("check", 24) << pad("status", 14) << pad("lhs", 26) << pad("rhs", 26) << "slack\n";
  for (const auto& r : results) {
    os << pad(r.id, 24) << pad(to_string(r.status), 14) << pad(cell(r.lhs), 26) << pad(cell(r.rhs), 26)
       << cell(r.slack) << "\n";
    if (!r.notes.empty()) os << "    " << r.notes << "\n";
    if (!r.witness.is_null()) os << "    witness: " << r.witness.dump() << "\n";
  }
}

void emit_checks(const std::vector<CheckResult>& results, OutputFormat format, const std::string& path,
                 std::ostream& out) {
  Sink sink(path, out);
  auto& os = sink.stream();
  switch (format) {
    case OutputFormat::Table:
      print_check_table(os, results);
      break;
    case OutputFormat::Csv:
      os << csv_header() << "\n";
      for (const auto& r : results) os << to_csv_row(r) << "\n";
      break;
    case OutputFormat::Json: {
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& r : results) arr.push_back(to_json(r));
      os << arr.dump(2) << "\n";
      break;
    }
  }
}

/// Splits "id... --key value ..." into ids and overrides.
void parse_check_tokens(const std::vector<std::string>& tokens, std::vector<std::string>& ids, Params& overrides) {
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::string& t = tokens[i];
    if (t.rfind("--", 0) == 0) {
      std::string key = t.substr(2);
      std::string value;
      if (const auto eq = key.find('='); eq != std::string::npos) {
        value = key.substr(eq + 1);
        key = key.substr(0, eq);
      } else {
        if (i + 1 >= tokens.size()) throw InvalidInput("parameter --" + key + " needs a value");
        value = tokens[++i];
      }
      overrides[key] = parse_big_rational(value);
    } else if (t.rfind("-", 0) == 0 && t.size() > 1 && !std::isdigit(static_cast<unsigned char>(t[1]))) {
      throw InvalidInput("unknown option '" + t + "'");
    } else {
      ids.push_back(t);
    }
  }
}

std::vector<CheckRequest> requests_for(const std::vector<std::string>& ids, const Params& overrides) {
  std::vector<CheckRequest> reqs;
  for (const auto& id : ids) {
    const Check& check = find_check(id);
    Params mine;
    for (const auto& [k, v] : overrides) {
      if (check.defaults.count(k)) mine[k] = v;
    }
    reqs.push_back({id, mine});
  }
  for (const auto& [k, v] : overrides) {
    const bool used = std::any_of(reqs.begin(), reqs.end(), [&](const CheckRequest& r) { return r.overrides.count(k); });
    if (!used) throw InvalidInput("no selected check takes parameter '" + k + "'");
  }
  return reqs;
}

struct EstimateRow {
  std::string mechanism;
  std::size_t m_s = 0;
  std::size_t m_b = 0;
  Expectation value;
};

Expectation estimate_one(const std::string& mechanism, const MarketSpec& spec, bool mc, std::uint64_t n,
                         std::uint64_t seed) {
  if (mechanism == "opt") return mc ? expected_opt_mc(spec, n, seed) : expected_opt_exact(spec);
  const Mechanism m = make_mechanism(mechanism);
  return mc ? expected_gft_mc(m, spec, n, seed) : expected_gft_exact(m, spec);
}

void emit_estimates(const std::vector<EstimateRow>& rows, OutputFormat format, const std::string& path,
                    std::ostream& out) {
  Sink sink(path, out);
  auto& os = sink.stream();
  switch (format) {
    case OutputFormat::Table:
      os << std::left << std::setw(20) << "mechanism" << std::setw(6) << "m_S" << std::setw(6) << "m_B"
         << "expected_gft\n";
      for (const auto& r : rows) {
        os << std::left << std::setw(20) << r.mechanism << std::setw(6) << r.m_s << std::setw(6) << r.m_b
           << r.value.str() << "\n";
      }
      break;
    case OutputFormat::Csv:
      os << "mechanism,m_s,m_b,mode,value,std_error,n,seed\n";
      for (const auto& r : rows) {
        os << r.mechanism << ',' << r.m_s << ',' << r.m_b << ',' << (r.value.is_exact() ? "exact" : "mc") << ','
           << (r.value.is_exact() ? to_string(r.value.exact) : std::to_string(r.value.mean)) << ','
           << r.value.error() << ',' << r.value.n_samples << ',' << r.value.seed << "\n";
      }
      break;
    case OutputFormat::Json: {
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& r : rows) {
        arr.push_back({{"mechanism", r.mechanism}, {"m_s", r.m_s}, {"m_b", r.m_b}, {"expected_gft", to_json(r.value)}});
      }
      os << arr.dump(2) << "\n";
      break;
    }
  }
}

int finish_parse_error(const CLI::ParseError& e, CLI::App& app, std::ostream& out, std::ostream& err) {
  const int code = app.exit(e, out, err);
  return code == 0 ? kExitPass : kExitInvalid;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"gftlab: gains-from-trade experiments for double auctions", "gftlab"};
  app.require_subcommand(1);

  // check
  auto* check = app.add_subcommand("check", "Run registered checks (all when no id is given)");
  check->allow_extras();
  std::string check_format = "table", check_output, check_config;
  std::uint64_t check_seed = CheckContext{}.seed;
  unsigned check_workers = 0;
  bool strict_btr = false;
  check->add_option("--format", check_format, "table, csv or json");
  check->add_option("--output", check_output, "Write results to this file");
  check->add_option("--config", check_config, "JSON run configuration");
  check->add_option("--seed", check_seed, "Base seed for Monte Carlo and fuzzing");
  check->add_option("--workers", check_workers, "Concurrent checks (0 = hardware threads)");
  check->add_flag("--btr-strict", strict_btr, "Run against BTR with a strict price comparison");

  // estimate
  auto* estimate = app.add_subcommand("estimate", "Expected GFT of mechanisms on a configured market");
  std::string seller_arg, buyer_arg, profile_arg, mode = "auto", est_format = "table", est_output, est_config;
  std::size_t est_ms = 1, est_mb = 1;
  std::vector<std::string> mechanisms;
  std::uint64_t est_n = 1000000;
  std::optional<std::uint64_t> est_seed;
  estimate->add_option("--seller", seller_arg, "Seller distribution");
  estimate->add_option("--buyer", buyer_arg, "Buyer distribution");
  estimate->add_option("--ms", est_ms, "Number of sellers");
  estimate->add_option("--mb", est_mb, "Number of buyers");
  estimate->add_option("--mechanism,-m", mechanisms, "Mechanism name(s); 'opt' is the efficient benchmark");
  estimate->add_option("--mode", mode, "auto, exact or mc")->check(CLI::IsMember({"auto", "exact", "mc"}));
  estimate->add_option("--n", est_n, "Monte Carlo draws");
  estimate->add_option("--seed", est_seed, "Monte Carlo seed (required in mc mode)");
  estimate->add_option("--profile", profile_arg, "Run once on a literal profile such as 's=2;b=3'");
  estimate->add_option("--format", est_format, "table, csv or json");
  estimate->add_option("--output", est_output, "Write results to this file");
  estimate->add_option("--config", est_config, "JSON run configuration");

  // bk-gap
  auto* bk = app.add_subcommand("bk-gap", "Smallest k with BTR(m_S,m_B+k) >= OPT(m_S,m_B) over a family");
  std::string family = "default", relation = "fsd", bk_seller, bk_buyer;
  std::size_t bk_ms = 1, bk_mb = 1, k_max = 4;
  bool bk_rows = false;
  bk->add_option("--family", family, "default or two-point")->check(CLI::IsMember({"default", "two-point"}));
  bk->add_option("--relation", relation, "fsd or iid")->check(CLI::IsMember({"fsd", "iid"}));
  bk->add_option("--seller", bk_seller, "Single seller distribution (with --buyer)");
  bk->add_option("--buyer", bk_buyer, "Single buyer distribution (with --seller)");
  bk->add_option("--ms", bk_ms, "Number of sellers");
  bk->add_option("--mb", bk_mb, "Number of buyers");
  bk->add_option("--kmax", k_max, "Largest k tried");
  bk->add_flag("--rows", bk_rows, "Print one line per distribution pair");

  // list
  auto* list = app.add_subcommand("list", "List checks and mechanisms");

  std::vector<const char*> argv{"gftlab"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return finish_parse_error(e, app, out, err);
  }

  try {
    if (*list) {
      out << "checks:\n";
      for (const auto& c : check_registry()) {
        out << "  " << std::left << std::setw(24) << c.id << c.summary << "\n      defaults:";
        for (const auto& [k, v] : c.defaults) out << " " << k << "=" << to_string(v);
        out << "\n";
      }
      out << "mechanisms:\n";
      for (const auto& m : mechanism_names()) out << "  " << m << "\n";
      out << "  opt\n";
      return kExitPass;
    }

    if (*check) {
      CheckContext ctx;
      ctx.seed = check_seed;
      if (strict_btr) ctx.btr = btr_mechanism(PriceComparison::Strict);
      std::vector<CheckRequest> requests;
      OutputFormat format = parse_output_format(check_format);
      std::string path = check_output;
      std::vector<std::string> ids;
      Params overrides;
      parse_check_tokens(check->remaining(), ids, overrides);
      if (!check_config.empty()) {
        const RunConfig cfg = load_run_config(check_config);
        requests = cfg.checks;
        if (check_format == "table") format = cfg.format;
        if (path.empty()) path = cfg.output_path;
        if (!ids.empty() || !overrides.empty()) {
          const auto extra = requests_for(ids, overrides);
          requests.insert(requests.end(), extra.begin(), extra.end());
        }
      } else {
        if (ids.empty()) ids = check_ids();
        requests = requests_for(ids, overrides);
      }
      const auto results = run_checks(requests, ctx, check_workers);
      emit_checks(results, format, path, out);
      const bool failed = std::any_of(results.begin(), results.end(), [](const CheckResult& r) { return r.failed(); });
      return failed ? kExitFail : kExitPass;
    }

    if (*estimate) {
      if (mechanisms.empty()) mechanisms = {"btr"};
      for (const auto& m : mechanisms) {
        if (m != "opt") make_mechanism(m);
      }
      OutputFormat format = parse_output_format(est_format);
      if (!profile_arg.empty()) {
        const ValueProfile p = parse_profile(profile_arg);
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& name : mechanisms) {
          const MarketOutcome o = name == "opt" ? vcg(p) : make_mechanism(name)(p);
          if (format == OutputFormat::Json) {
            auto j = to_json(o);
            j["mechanism"] = name;
            arr.push_back(j);
          } else {
            out << name << ": gft=" << o.gft.str() << " budget_surplus=" << o.budget_surplus.str()
                << " outcome=" << to_json(o).dump() << "\n";
          }
        }
        if (format == OutputFormat::Json) out << arr.dump(2) << "\n";
        return kExitPass;
      }

      std::vector<MarketJob> jobs;
      std::string path = est_output;
      bool mc = mode == "mc";
      std::uint64_t n = est_n;
      if (!est_config.empty()) {
        const RunConfig cfg = load_run_config(est_config);
        jobs = cfg.markets;
        // The mc block supplies draws and seed; --mode still picks the engine.
        if (cfg.mc_n) {
          n = *cfg.mc_n;
          est_seed = cfg.mc_seed;
        }
        if (est_format == "table") format = cfg.format;
        if (path.empty()) path = cfg.output_path;
      } else {
        if (seller_arg.empty() || buyer_arg.empty()) throw InvalidInput("estimate needs --seller and --buyer (or --profile / --config)");
        jobs.push_back({{parse_distribution_arg(seller_arg), parse_distribution_arg(buyer_arg), est_ms, est_mb},
                        mechanisms});
      }
      std::vector<EstimateRow> rows;
      for (const auto& job : jobs) {
        const bool job_mc = mc || (mode == "auto" && !(job.spec.seller.is_discrete() && job.spec.buyer.is_discrete()));
        if (job_mc && !est_seed) throw InvalidInput("Monte Carlo estimates require --seed");
        for (const auto& name : job.mechanisms) {
          rows.push_back({name, job.spec.m_s, job.spec.m_b,
                          estimate_one(name, job.spec, job_mc, n, est_seed.value_or(0))});
        }
      }
      emit_estimates(rows, format, path, out);
      return kExitPass;
    }

    if (*bk) {
      std::vector<DistributionPair> pairs;
      if (!bk_seller.empty() || !bk_buyer.empty()) {
        if (bk_seller.empty() || bk_buyer.empty()) throw InvalidInput("--seller and --buyer go together");
        pairs.emplace_back(parse_distribution_arg(bk_seller), parse_distribution_arg(bk_buyer));
      } else {
        const auto fam = family == "two-point" ? two_point_family() : default_family();
        pairs = relation == "iid" ? iid_pairs(fam) : fsd_pairs(fam);
      }
      const auto report = bk_gap_sweep(pairs, bk_ms, bk_mb, k_max);
      if (bk_rows) {
        for (std::size_t i = 0; i < report.entries.size(); ++i) {
          const auto& e = report.entries[i];
          out << i << "\t" << (e.k ? std::to_string(*e.k) : "> " + std::to_string(k_max)) << "\t"
              << to_json(e.pair).dump() << "\n";
        }
      }
      out << "empirical over configured family (" << pairs.size() << " pairs, m_S=" << bk_ms << ", m_B=" << bk_mb
          << "): max k = " << (report.family_max ? std::to_string(*report.family_max) : "> " + std::to_string(k_max))
          << "\n";
      return kExitPass;
    }
  } catch (const InvalidInput& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const TooLarge& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::overflow_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
  return kExitInvalid;
}

}  // namespace gft
