// psv: divisor-closed prime sets. Enumeration, counting, Pratt trees,
// congruence matrices and contraction certificates.
//
// Exit codes: 0 success, 1 computation error (or a failing lemma check),
// 2 usage error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "psv/psv.hpp"
#include "psv/report_json.hpp"

namespace {

using psv::u64;

// Accepts plain integers and the power form "2^30".
u64 parse_scaled(const std::string& text) {
    try {
        auto caret = text.find('^');
        if (caret != std::string::npos) {
            u64 base = std::stoull(text.substr(0, caret));
            u64 exp = std::stoull(text.substr(caret + 1));
            if (base == 0) throw psv::parse_error("zero base", 0);
            u64 value = 1;
            for (u64 i = 0; i < exp; ++i) {
                if (value > UINT64_MAX / base)
                    throw psv::parse_error("value overflows 64 bits", caret);
                value *= base;
            }
            return value;
        }
        std::size_t pos = 0;
        u64 value = std::stoull(text, &pos);
        if (pos != text.size())
            throw psv::parse_error("trailing characters in integer '" + text + "'",
                                   pos);
        return value;
    } catch (const psv::parse_error&) {
        throw;
    } catch (const std::exception&) {
        throw psv::parse_error("expected an integer, got '" + text + "'", 0);
    }
}

std::pair<u64, u64> parse_window(const std::string& text) {
    auto colon = text.find(':');
    if (colon == std::string::npos)
        throw psv::parse_error("window must look like a:b", 0);
    u64 lo = parse_scaled(text.substr(0, colon));
    u64 hi = parse_scaled(text.substr(colon + 1));
    if (lo > hi) throw psv::parse_error("window bounds out of order", colon);
    return {lo, hi};
}

std::vector<u64> parse_checkpoints(const std::string& spec, u64 bound) {
    if (spec == "pow2") return psv::pow2_checkpoints(bound);
    std::vector<u64> out;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_scaled(item));
    return out;
}

std::vector<psv::CountCheckpoint> read_counts_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw psv::io_error("cannot open " + path);
    std::vector<psv::CountCheckpoint> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line == "x,count") continue;
        auto comma = line.find(',');
        if (comma == std::string::npos)
            throw psv::io_error("malformed counts line: " + line);
        out.push_back({std::stoull(line.substr(0, comma)),
                       std::stoull(line.substr(comma + 1))});
    }
    return out;
}

psv::ForcingState parse_assumptions(const std::vector<std::string>& specs) {
    psv::ForcingState state;
    for (const auto& spec : specs) {
        auto colon = spec.find(':');
        if (colon == std::string::npos)
            throw psv::parse_error("assumption must look like prime:exp", 0);
        bool exact = !spec.empty() && spec.back() == '!';
        u64 p = parse_scaled(spec.substr(0, colon));
        std::string exp_part = spec.substr(colon + 1);
        if (exact) exp_part.pop_back();
        int e = static_cast<int>(parse_scaled(exp_part));
        if (e < 1) throw psv::parse_error("assumption exponent must be >= 1", 0);
        if (!psv::is_prime(p))
            throw psv::parse_error("assumption key is not prime", 0);
        state.exponents[p] = {e, exact};
    }
    return state;
}

struct GlobalOptions {
    std::string format = "csv";
    unsigned threads = 0;
    u64 memcap = 0;
    u64 segment_size = 1ull << 20;
    u64 max_bound = 10'000'000'000ull;

    psv::SieveOptions sieve() const {
        psv::SieveOptions opt;
        opt.threads = threads;
        opt.memory_cap_bytes = memcap;
        opt.segment_size = segment_size;
        opt.max_bound = max_bound;
        return opt;
    }
    psv::MatrixOptions matrix() const {
        psv::MatrixOptions opt;
        opt.threads = threads;
        return opt;
    }
};

psv::ClosedSetRule rule_from(const std::string& spec) {
    psv::ClosedSetRule rule = psv::parse_rule(spec);
    if (rule.kind() == psv::RuleKind::omit && rule.omitted() == 2)
        std::cerr << "warning: omitting 2 yields the empty set\n";
    return rule;
}

int cmd_enumerate(const GlobalOptions& g, const std::string& rule_spec,
                  u64 limit) {
    auto rule = rule_from(rule_spec);
    auto members = psv::enumerate_members(rule, limit);
    if (g.format == "json") {
        std::cout << psv::enumerate_report(rule, limit, members).dump(2) << "\n";
    } else {
        for (u64 p : members) std::cout << p << "\n";
    }
    return 0;
}

int cmd_count(const GlobalOptions& g, const std::string& rule_spec, u64 limit,
              const std::string& checkpoint_spec, const std::string& save_path) {
    auto rule = rule_from(rule_spec);
    auto bitmap = psv::classify_range(rule, limit, g.sieve());
    auto cps = parse_checkpoints(checkpoint_spec, limit);
    auto counts = psv::count_members(bitmap, cps);
    if (!save_path.empty()) psv::save_bitmap(bitmap, save_path);
    if (g.format == "json")
        std::cout << psv::counts_report(rule, limit, counts).dump(2) << "\n";
    else
        std::cout << psv::counts_csv(counts);
    return 0;
}

int cmd_fit(const GlobalOptions& g, const std::string& path,
            const std::string& window_spec) {
    auto counts = read_counts_csv(path);
    auto [lo, hi] = parse_window(window_spec);
    auto fit = psv::fit_exponent(counts, lo, hi);
    if (g.format == "csv") {
        std::cout << "slope,intercept,residual,points\n"
                  << fit.slope << ',' << fit.intercept << ',' << fit.residual
                  << ',' << fit.used.size() << "\n";
    } else {
        std::cout << psv::fit_report(fit, lo, hi).dump(2) << "\n";
    }
    return 0;
}

int cmd_tree(const GlobalOptions& g, u64 p) {
    auto tree = psv::build_pratt_tree(p);
    if (g.format == "json")
        std::cout << psv::tree_report(*tree).dump(2) << "\n";
    else
        std::cout << psv::tree_text(*tree);
    return 0;
}

int cmd_matrix(const GlobalOptions& g, const std::string& rule_spec, u64 limit,
               u64 y, double s, const std::string& j_spec, u64 ncap) {
    auto rule = rule_from(rule_spec);
    int j = j_spec == "inf" ? psv::height_infinity
                            : static_cast<int>(parse_scaled(j_spec));
    auto universe = psv::BoundedUniverse::build(rule, limit, g.sieve());
    auto m = psv::build_matrix(universe, s, j, y, ncap, g.matrix());
    auto rows = psv::row_sums(m.entries());
    auto cols = psv::col_sums(m.entries());
    auto spectral = psv::spectral_radius(m.entries());
    std::cout << psv::matrix_report(rule, m, rows, cols, spectral).dump(2)
              << "\n";
    return 0;
}

int cmd_certify(const GlobalOptions& g, const std::string& rule_spec, u64 limit,
                u64 y, double s, unsigned power, u64 ncap) {
    auto rule = rule_from(rule_spec);
    auto universe = psv::BoundedUniverse::build(rule, limit, g.sieve());
    auto cert = psv::certify_contraction(universe, y, s, power, ncap, g.matrix());
    std::cout << psv::contraction_report(rule, cert).dump(2) << "\n";
    return cert.contracting ? 0 : 1;
}

int cmd_carmichael(const GlobalOptions& g, const std::vector<std::string>& assume,
                   u64 dcap) {
    auto state = psv::carmichael_forcing_closure(parse_assumptions(assume), dcap);
    if (g.format == "json") {
        std::cout << psv::forcing_report(state).dump(2) << "\n";
    } else {
        for (const auto& [p, bound] : state.exponents)
            std::cout << p << " exp>=" << bound.min_exponent
                      << (bound.exact ? " (exact)" : "") << "\n";
    }
    return 0;
}

int cmd_lemmas(const GlobalOptions& g, const std::string& rule_spec, u64 limit,
               u64 y, u64 ncap) {
    auto rule = rule_from(rule_spec);
    auto universe = psv::BoundedUniverse::build(rule, limit, g.sieve());
    psv::ordered_json checks = psv::ordered_json::array();
    bool all_pass = true;
    auto record = [&](const std::string& name, bool pass,
                      const psv::ordered_json& detail) {
        psv::ordered_json entry;
        entry["check"] = name;
        entry["pass"] = pass;
        for (const auto& [k, v] : detail.items()) entry[k] = v;
        checks.push_back(entry);
        all_pass = all_pass && pass;
    };

    {  // geometric-series inequality grid
        bool ok = true;
        double worst = 0.0;
        for (double s : {0.5, 0.9, 1.0}) {
            for (u64 q = 2; q <= 100; ++q) {
                if (!psv::is_prime(q)) continue;
                double lhs = 1.0 / (std::pow(static_cast<double>(q), s) - 1.0);
                double rhs = psv::lambda(s) /
                             std::pow(static_cast<double>(q - 1), s);
                worst = std::max(worst, lhs - rhs);
                ok = ok && lhs <= rhs * (1 + 1e-12);
            }
        }
        record("geometric_series_inequality", ok, {{"worst_excess", worst}});
    }
    {  // iterative bound V_h <= e^{lambda V_{h-1}}
        bool ok = true;
        psv::ordered_json detail;
        for (double s : {0.9, 1.0}) {
            for (int h = 2; h <= 4; ++h) {
                double vh = psv::v_h(universe, h, s, universe.bound()).value;
                double vh1 = psv::v_h(universe, h - 1, s, universe.bound()).value;
                double rhs = std::exp(psv::lambda(s) * vh1);
                ok = ok && vh <= rhs;
            }
        }
        record("iterative_height_bound", ok, detail);
    }
    {  // tilde-set bound
        bool ok = true;
        double worst_margin = 1e300;
        for (double s : {0.9, 1.0}) {
            for (auto [j, k] : {std::pair{1, 2}, std::pair{2, 3}}) {
                auto rep = psv::check_lemma_tilde_bound(universe, j, k, s, ncap,
                                                        g.threads);
                ok = ok && rep.holds;
                worst_margin = std::min(worst_margin,
                                        rep.rhs_exact - rep.lhs_truncated);
            }
        }
        record("tilde_set_bound", ok, {{"worst_margin", worst_margin}});
    }
    {  // closed-form column sums against direct sums
        bool ok = true;
        double worst = 0.0;
        auto t_flags =
            psv::t_h_flags(universe, psv::height_infinity, ncap, g.threads);
        for (u64 yy : {3ull, 5ull, 7ull}) {
            auto m = psv::build_matrix(universe, 1.0, psv::height_infinity, yy,
                                       ncap, g.matrix());
            auto cols = psv::col_sums(m.entries());
            for (std::size_t i = 0; i < m.residues().members.size(); ++i) {
                u64 b = m.residues().members[i];
                auto cf = psv::column_sum_closed_form(universe, m, b, &t_flags);
                double direct = cols.per[i];
                double diff = std::fabs(cf.matched - direct);
                double rel = direct > 0 ? diff / direct : diff;
                worst = std::max(worst, rel);
                ok = ok && rel <= 1e-9;
            }
        }
        record("column_sum_closed_form", ok, {{"worst_rel_diff", worst}});
    }
    {  // primitive-root certificate
        psv::ordered_json detail;
        bool ok = true;
        u64 p_pick = 0;
        for (u64 p = 2; p <= y; ++p) {
            if (psv::is_prime(p) && !universe.is_member(p) &&
                psv::is_primitive_root(2, p)) {
                p_pick = p;
                break;
            }
        }
        if (p_pick == 0) {
            detail["skipped"] = "no non-member p <= y with 2 as primitive root";
        } else {
            auto cert = psv::certify_primroot_bound(universe, p_pick, y, ncap,
                                                    g.matrix());
            ok = cert.holds;
            detail["p"] = p_pick;
            detail["col_sum_max"] = cert.column_sum_max;
            detail["bound"] = cert.bound;
            detail["margin"] = cert.margin;
        }
        record("primroot_column_bound", ok, detail);
    }
    {  // multi-level descent chain, reported without assertion
        psv::ordered_json detail;
        try {
            auto rep = psv::descent_chain_diagnostic(universe, 10, 6, 2, y, 1.0,
                                                     ncap, g.matrix());
            detail["lhs"] = rep.lhs;
            detail["rhs"] = rep.rhs;
            detail["middle_term"] = rep.middle_term;
            detail["tail_term"] = rep.tail_term;
            detail["lhs_below_rhs"] = rep.lhs_below_rhs;
            detail["diagnostic_only"] = true;
        } catch (const psv::hypothesis_error& e) {
            detail["skipped"] = e.what();
        }
        record("descent_chain_diagnostic", true, detail);
    }
    {  // crude bound dominates every column sum
        auto m = psv::build_matrix(universe, 1.0, psv::height_infinity, 5, ncap,
                                   g.matrix());
        auto cols = psv::col_sums(m.entries());
        double crude = psv::crude_bound(universe, 5, universe.bound());
        bool ok = cols.max <= crude;
        record("crude_column_bound", ok,
               {{"col_sum_max", cols.max}, {"crude", crude}});
    }
    {  // Perron root below both sum norms
        auto m = psv::build_matrix(universe, 1.0, psv::height_infinity, y, ncap,
                                   g.matrix());
        auto rows = psv::row_sums(m.entries());
        auto cols = psv::col_sums(m.entries());
        auto spectral = psv::spectral_radius(m.entries());
        bool ok = spectral.radius <=
                  std::min(rows.max, cols.max) * (1 + 1e-9);
        record("perron_row_col_bound", ok,
               {{"radius", spectral.radius},
                {"row_sum_max", rows.max},
                {"col_sum_max", cols.max}});
    }

    psv::ordered_json out;
    out["schema"] = 1;
    out["rule"] = rule.spec();
    out["bound"] = universe.bound();
    out["ncap"] = ncap;
    out["y"] = y;
    out["checks"] = checks;
    out["all_pass"] = all_pass;
    std::cout << out.dump(2) << "\n";
    return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"divisor-closed prime sets: sieve, trees, matrices, certificates"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config");

    GlobalOptions g;
    app.add_option("--format,--out", g.format, "output format: csv|json")
        ->check(CLI::IsMember({"csv", "json", "text"}));
    app.add_option("--threads", g.threads, "worker threads (0 = auto)")
        ->envname("PSV_THREADS");
    app.add_option("--memcap", g.memcap, "bitmap memory cap in bytes (0 = off)");
    app.add_option("--segment-size", g.segment_size, "sieve segment size");
    app.add_option("--max-bound", g.max_bound, "largest allowed sieve bound");

    std::string rule_spec = "omit:3";
    std::string window_spec = "1024:1048576";
    std::string checkpoint_spec = "pow2";
    std::string in_path, save_path, j_spec = "inf";
    u64 limit = 1'000'000, y = 13, ncap = 1'000'000, dcap = 1'000'000'000;
    u64 tree_p = 7;
    double s = 1.0;
    unsigned power = 3;
    std::vector<std::string> assume;

    auto* c_enum = app.add_subcommand("enumerate", "list members up to a bound");
    c_enum->add_option("--rule", rule_spec, "rule spec")->required();
    c_enum->add_option("--limit", limit, "inclusive bound")->required();

    auto* c_count = app.add_subcommand("count", "sieve and count members");
    c_count->add_option("--rule", rule_spec)->required();
    c_count->add_option("--limit", limit)->required();
    c_count->add_option("--checkpoints", checkpoint_spec,
                        "pow2 or comma-separated x values");
    c_count->add_option("--save-bitmap", save_path, "write PSV1 bitmap file");

    auto* c_fit = app.add_subcommand("fit", "fit log-log slope of counts");
    c_fit->add_option("--in", in_path, "counts CSV (x,count)")->required();
    c_fit->add_option("--window", window_spec, "x window a:b (2^k accepted)");

    auto* c_tree = app.add_subcommand("tree", "print the Pratt tree of a prime");
    c_tree->add_option("p", tree_p, "prime")->required();

    auto* c_matrix = app.add_subcommand("matrix", "build the congruence matrix");
    c_matrix->add_option("--rule", rule_spec)->required();
    c_matrix->add_option("--limit", limit, "universe bound");
    c_matrix->add_option("--y", y);
    c_matrix->add_option("--s", s);
    c_matrix->add_option("--j", j_spec, "height cap or 'inf'");
    c_matrix->add_option("--ncap", ncap);

    auto* c_cert = app.add_subcommand("certify", "contraction certificate");
    c_cert->add_option("--rule", rule_spec)->required();
    c_cert->add_option("--limit", limit, "universe bound");
    c_cert->add_option("--y", y);
    c_cert->add_option("--s", s);
    c_cert->add_option("--power", power);
    c_cert->add_option("--ncap", ncap);

    auto* c_lemmas = app.add_subcommand("lemmas", "run the lemma check suite");
    c_lemmas->add_option("--rule", rule_spec)->required();
    c_lemmas->add_option("--limit", limit, "universe bound");
    c_lemmas->add_option("--y", y);
    c_lemmas->add_option("--ncap", ncap);
    std::string suite = "all";
    c_lemmas->add_option("--suite", suite)->check(CLI::IsMember({"all"}));

    auto* c_car = app.add_subcommand("carmichael", "forcing-closure fixed point");
    c_car->add_option("--assume", assume, "prime:exp or prime:exp! (exact)");
    c_car->add_option("--dcap", dcap, "candidate d cap");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp" ||
            e.get_name() == "CallForVersion")
            return app.exit(e);
        app.exit(e);
        return 2;
    }

    try {
        if (app.got_subcommand(c_enum)) return cmd_enumerate(g, rule_spec, limit);
        if (app.got_subcommand(c_count))
            return cmd_count(g, rule_spec, limit, checkpoint_spec, save_path);
        if (app.got_subcommand(c_fit)) return cmd_fit(g, in_path, window_spec);
        if (app.got_subcommand(c_tree)) return cmd_tree(g, tree_p);
        if (app.got_subcommand(c_matrix))
            return cmd_matrix(g, rule_spec, limit, y, s, j_spec, ncap);
        if (app.got_subcommand(c_cert))
            return cmd_certify(g, rule_spec, limit, y, s, power, ncap);
        if (app.got_subcommand(c_lemmas))
            return cmd_lemmas(g, rule_spec, limit, y, ncap);
        if (app.got_subcommand(c_car)) return cmd_carmichael(g, assume, dcap);
    } catch (const psv::parse_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
