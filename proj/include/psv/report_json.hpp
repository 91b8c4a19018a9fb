#pragma once

// JSON/CSV emission for every CLI-facing result. All documents carry
// "schema": 1; key order is fixed (insertion order), so identical inputs
// serialize to identical bytes.

#include <string>

#include <json.hpp>

#include "psv/analysis.hpp"
#include "psv/closed_sets.hpp"
#include "psv/pratt.hpp"

namespace psv {

using ordered_json = nlohmann::ordered_json;

inline ordered_json enumerate_report(const ClosedSetRule& rule, u64 limit,
                                     const std::vector<u64>& members) {
    ordered_json j;
    j["schema"] = 1;
    j["rule"] = rule.spec();
    j["limit"] = limit;
    j["count"] = members.size();
    j["members"] = members;
    return j;
}

inline std::string counts_csv(const std::vector<CountCheckpoint>& checkpoints) {
    std::string out = "x,count\n";
    for (const auto& cp : checkpoints) {
        out += std::to_string(cp.x);
        out += ',';
        out += std::to_string(cp.count);
        out += '\n';
    }
    return out;
}

inline ordered_json counts_report(const ClosedSetRule& rule, u64 bound,
                                  const std::vector<CountCheckpoint>& cps) {
    ordered_json j;
    j["schema"] = 1;
    j["rule"] = rule.spec();
    j["bound"] = bound;
    ordered_json arr = ordered_json::array();
    for (const auto& cp : cps) arr.push_back({{"x", cp.x}, {"count", cp.count}});
    j["checkpoints"] = arr;
    return j;
}

inline ordered_json fit_report(const ExponentFit& fit, u64 x_min, u64 x_max) {
    ordered_json j;
    j["schema"] = 1;
    j["window"] = {{"min", x_min}, {"max", x_max}};
    j["points"] = fit.used.size();
    j["slope"] = fit.slope;
    j["intercept"] = fit.intercept;
    j["residual"] = fit.residual;
    return j;
}

inline ordered_json tree_json(const PrattTree& tree) {
    ordered_json j;
    j["label"] = tree.label;
    j["height"] = tree.height;
    ordered_json children = ordered_json::array();
    for (const auto& child : tree.children) children.push_back(tree_json(*child));
    j["children"] = children;
    return j;
}

inline ordered_json tree_report(const PrattTree& tree) {
    ordered_json j;
    j["schema"] = 1;
    j["tree"] = tree_json(tree);
    return j;
}

inline void tree_text_rec(const PrattTree& tree, int depth, std::string& out) {
    out.append(static_cast<std::size_t>(depth) * 2, ' ');
    out += std::to_string(tree.label);
    out += " (height ";
    out += std::to_string(tree.height);
    out += ")\n";
    for (const auto& child : tree.children) tree_text_rec(*child, depth + 1, out);
}

inline std::string tree_text(const PrattTree& tree) {
    std::string out;
    tree_text_rec(tree, 0, out);
    return out;
}

inline ordered_json spectral_json(const SpectralResult& s) {
    return {{"radius", s.radius},
            {"rayleigh_min", s.rayleigh_min},
            {"rayleigh_max", s.rayleigh_max},
            {"iterations", s.iterations}};
}

inline ordered_json matrix_report(const ClosedSetRule& rule,
                                  const CongruenceMatrix& m,
                                  const SumSummary& rows,
                                  const SumSummary& cols,
                                  const SpectralResult& spectral) {
    ordered_json j;
    j["schema"] = 1;
    j["rule"] = rule.spec();
    j["y"] = m.residues().y;
    j["Q"] = m.Q();
    j["s"] = m.s();
    j["j"] = m.height_cap() == height_infinity
                 ? ordered_json("inf")
                 : ordered_json(m.height_cap());
    j["ncap"] = m.n_cap();
    j["residues"] = m.residues().members.size();
    j["row_sum_max"] = rows.max;
    j["col_sum_max"] = cols.max;
    j["spectral"] = spectral_json(spectral);
    return j;
}

inline ordered_json contraction_report(const ClosedSetRule& rule,
                                       const ContractionCertificate& cert) {
    ordered_json j;
    j["schema"] = 1;
    j["rule"] = rule.spec();
    j["y"] = cert.y;
    j["s"] = cert.s;
    j["power"] = cert.power;
    j["ncap"] = cert.n_cap;
    j["residues"] = cert.residue_count;
    j["row_sum_max"] = cert.row_sum_max;
    j["col_sum_max"] = cert.col_sum_max;
    j["row_sum_max_power"] = cert.row_sum_max_power;
    j["col_sum_max_power"] = cert.col_sum_max_power;
    j["spectral"] = spectral_json(cert.spectral);
    j["contracting"] = cert.contracting;
    j["margin"] = cert.margin;
    return j;
}

inline ordered_json primroot_report(const ClosedSetRule& rule,
                                    const PrimrootCertificate& cert) {
    ordered_json j;
    j["schema"] = 1;
    j["rule"] = rule.spec();
    j["p"] = cert.p;
    j["y"] = cert.y;
    j["ncap"] = cert.n_cap;
    j["col_sum_max"] = cert.column_sum_max;
    j["k_truncated"] = cert.k_truncated;
    j["bound"] = cert.bound;
    j["margin"] = cert.margin;
    j["holds"] = cert.holds;
    return j;
}

inline ordered_json bootstrap_json(const BootstrapReport& report) {
    ordered_json j;
    j["schema"] = 1;
    j["eps_formula"] = report.eps_formula;
    j["eps_used"] = report.eps_used;
    j["x_tilde"] = report.x_tilde;
    j["f_at_x_tilde"] = report.f_at_x_tilde;
    j["f_at_eps"] = report.f_at_eps;
    j["converged"] = report.converged;
    return j;
}

inline ordered_json forcing_report(const ForcingState& state) {
    ordered_json j;
    j["schema"] = 1;
    ordered_json arr = ordered_json::array();
    for (const auto& [p, bound] : state.exponents)
        arr.push_back({{"prime", p},
                       {"min_exponent", bound.min_exponent},
                       {"exact", bound.exact}});
    j["exponents"] = arr;
    return j;
}

}  // namespace psv
