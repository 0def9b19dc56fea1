#include "cafe/plots.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "cafe/pipeline.hpp"

namespace cafe::plots {

using nlohmann::json;

namespace {

std::string num(const json& j) {
    return j.is_number() ? io::csv_number(j.get<double>()) : std::string();
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string fmt4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

std::string gap_table_csv(const json& report) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& a : report.at("architectures")) {
        rows.push_back({a.at("architecture_id").get<std::string>(), num(a.at("expected_dispersion")),
                        num(a.at("observed_dispersion")), num(a.at("gap")), num(a.at("ci_low")),
                        num(a.at("ci_high")), a.at("classification").get<std::string>(),
                        num(a.at("tolerance")), std::to_string(a.at("n_samples").get<std::size_t>())});
    }
    return io::to_csv({"architecture_id", "expected_dispersion", "observed_dispersion", "gap", "ci_low",
                       "ci_high", "classification", "tolerance", "n_samples"},
                      rows);
}

std::string fit_diagnostics_csv(const json& report) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& a : report.at("architectures")) {
        for (const auto& s : a.at("fit_diagnostics").at("per_signal")) {
            rows.push_back({a.at("architecture_id").get<std::string>(), s.at("signal").get<std::string>(),
                            num(s.at("r_squared")), num(s.at("rmse")), num(s.at("mae")),
                            std::to_string(s.at("n").get<std::size_t>())});
        }
    }
    return io::to_csv({"architecture_id", "judge_signal", "r_squared", "rmse", "mae", "n"}, rows);
}

std::string std_expansion_csv(const json& report) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& a : report.at("architectures")) {
        std::vector<std::string> row{a.at("architecture_id").get<std::string>()};
        for (auto name : kStressNames) row.push_back(num(a.at("std_expansion").at(std::string(name))));
        rows.push_back(std::move(row));
    }
    std::vector<std::string> header{"architecture_id"};
    for (auto name : kStressNames) header.emplace_back(name);
    return io::to_csv(header, rows);
}

std::string quality_drop_csv(const json& report) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& a : report.at("architectures")) {
        const json& q = a.at("quality_drop");
        if (q.is_null()) continue;
        rows.push_back({a.at("architecture_id").get<std::string>(), num(q.at("clean_mean")),
                        num(q.at("perturbed_mean")), num(q.at("drop")), num(q.at("relative_drop"))});
    }
    return io::to_csv({"architecture_id", "clean_quality", "perturbed_quality", "drop", "relative_drop"},
                      rows);
}

std::string marginals_csv(const json& report, const RowsByArchitecture& by_arch) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& a : report.at("architectures")) {
        const std::string id = a.at("architecture_id").get<std::string>();
        const auto it = by_arch.find(id);
        if (it == by_arch.end()) continue;
        std::optional<DeformationMap> map;
        if (!a.at("deformation_map").is_null()) {
            map = DeformationMap{id, io::coefficients_from_json(a.at("deformation_map").at("coefficients"),
                                                                "deformation_map")};
        }
        for (const auto& r : it->second) {
            const Vec4 x = center(r.record.designed_stress).values();
            const Vec4 fitted = map ? map->apply(x) : Vec4{};
            for (std::size_t d = 0; d < kStressDims; ++d) {
                rows.push_back({id, std::string(kStressNames[d]), r.record.prompt_id, r.record.variant_id,
                                r.record.is_clean ? "true" : "false",
                                io::csv_number(r.record.designed_stress[d]),
                                io::csv_number(r.result.psi_obs[d]),
                                map ? io::csv_number(fitted[d] + 0.5) : std::string()});
            }
        }
    }
    return io::to_csv({"architecture_id", "dimension", "prompt_id", "variant_id", "is_clean",
                       "designed", "observed", "fitted_observed"},
                      rows);
}

std::string gap_svg(const json& report) {
    const auto& archs = report.at("architectures");
    const double width = 120.0 + 90.0 * static_cast<double>(std::max<std::size_t>(archs.size(), 1));
    const double height = 360.0, top = 30.0, bottom = 310.0, left = 70.0;
    double lo = 0.0, hi = 0.0, tol = 0.01;
    for (const auto& a : archs) {
        lo = std::min({lo, a.at("ci_low").get<double>(), a.at("gap").get<double>()});
        hi = std::max({hi, a.at("ci_high").get<double>(), a.at("gap").get<double>()});
        tol = a.at("tolerance").get<double>();
    }
    lo = std::min(lo, -tol) * 1.15;
    hi = std::max(hi, tol) * 1.15;
    const auto y = [&](double v) { return bottom - (v - lo) / (hi - lo) * (bottom - top); };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width) << "\" height=\"" << fmt(height)
       << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<text x=\"" << fmt(width / 2) << "\" y=\"18\" text-anchor=\"middle\">Distributional Jensen gap by architecture</text>\n";
    os << "<line x1=\"" << fmt(left) << "\" y1=\"" << fmt(y(0)) << "\" x2=\"" << fmt(width - 20) << "\" y2=\"" << fmt(y(0))
       << "\" stroke=\"black\"/>\n";
    for (double t : {tol, -tol}) {
        os << "<line x1=\"" << fmt(left) << "\" y1=\"" << fmt(y(t)) << "\" x2=\"" << fmt(width - 20) << "\" y2=\""
           << fmt(y(t)) << "\" stroke=\"gray\" stroke-dasharray=\"5,4\"/>\n";
    }
    for (double t : {lo, 0.0, hi}) {
        os << "<text x=\"" << fmt(left - 6) << "\" y=\"" << fmt(y(t) + 4) << "\" text-anchor=\"end\">" << fmt4(t)
           << "</text>\n";
    }
    double cx = left + 55.0;
    for (const auto& a : archs) {
        const double g = a.at("gap").get<double>();
        const double y0 = y(0), yg = y(g);
        os << "<rect x=\"" << fmt(cx - 25) << "\" y=\"" << fmt(std::min(y0, yg)) << "\" width=\"50\" height=\""
           << fmt(std::abs(y0 - yg)) << "\" fill=\"#4c72b0\"/>\n";
        const double yl = y(a.at("ci_low").get<double>()), yh = y(a.at("ci_high").get<double>());
        os << "<line x1=\"" << fmt(cx) << "\" y1=\"" << fmt(yl) << "\" x2=\"" << fmt(cx) << "\" y2=\"" << fmt(yh)
           << "\" stroke=\"black\"/>\n";
        for (double yy : {yl, yh}) {
            os << "<line x1=\"" << fmt(cx - 8) << "\" y1=\"" << fmt(yy) << "\" x2=\"" << fmt(cx + 8) << "\" y2=\""
               << fmt(yy) << "\" stroke=\"black\"/>\n";
        }
        os << "<text x=\"" << fmt(cx) << "\" y=\"" << fmt(bottom + 20) << "\" text-anchor=\"middle\">"
           << xml_escape(a.at("architecture_id").get<std::string>()) << "</text>\n";
        cx += 90.0;
    }
    os << "</svg>\n";
    return os.str();
}

std::string marginal_svg(const std::string& architecture_id, const std::vector<io::ReconstructionRow>& rows) {
    constexpr double panel = 220.0, pad = 40.0;
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(2 * panel + 3 * pad) << "\" height=\""
       << fmt(2 * panel + 3 * pad + 10) << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    for (std::size_t d = 0; d < kStressDims; ++d) {
        const double ox = pad + static_cast<double>(d % 2) * (panel + pad);
        const double oy = pad + 10 + static_cast<double>(d / 2) * (panel + pad);
        os << "<text x=\"" << fmt(ox + panel / 2) << "\" y=\"" << fmt(oy - 8) << "\" text-anchor=\"middle\">"
           << xml_escape(architecture_id) << " " << kStressNames[d] << "</text>\n";
        os << "<rect x=\"" << fmt(ox) << "\" y=\"" << fmt(oy) << "\" width=\"" << fmt(panel) << "\" height=\""
           << fmt(panel) << "\" fill=\"none\" stroke=\"black\"/>\n";
        os << "<line x1=\"" << fmt(ox) << "\" y1=\"" << fmt(oy + panel) << "\" x2=\"" << fmt(ox + panel)
           << "\" y2=\"" << fmt(oy) << "\" stroke=\"gray\" stroke-dasharray=\"5,4\"/>\n";
        for (const auto& r : rows) {
            const double px = ox + r.record.designed_stress[d] * panel;
            const double py = oy + (1.0 - r.result.psi_obs[d]) * panel;
            os << "<circle cx=\"" << fmt(px) << "\" cy=\"" << fmt(py) << "\" r=\"1.8\" fill=\"#dd8452\" fill-opacity=\"0.6\"/>\n";
        }
    }
    os << "</svg>\n";
    return os.str();
}

std::map<std::string, std::string> render_all(const json& report, const RowsByArchitecture& rows, bool svg) {
    std::map<std::string, std::string> files;
    files["gap_by_architecture.csv"] = gap_table_csv(report);
    files["marginals.csv"] = marginals_csv(report, rows);
    files["fit_diagnostics.csv"] = fit_diagnostics_csv(report);
    files["std_expansion.csv"] = std_expansion_csv(report);
    files["quality_drop.csv"] = quality_drop_csv(report);
    if (svg) {
        files["gap_by_architecture.svg"] = gap_svg(report);
        for (const auto& [id, r] : rows) files["marginals_" + file_stem(id) + ".svg"] = marginal_svg(id, r);
    }
    return files;
}

}  // namespace cafe::plots
