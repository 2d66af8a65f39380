// Command-line front end: merge, coeffs, dm, simulate (cdf|epsilon), ratio,
// dominate. All numeric output is RFC-4180 CSV with '.' decimals, LF line
// endings, and shortest round-trip floats; stochastic subcommands echo their
// seed as a leading "# seed=" comment. Exit codes: 0 ok, 2 input error,
// 3 domain/method error.

#include <algorithm>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pmerge/pmerge.hpp"

namespace {

using pmerge::format_double;

struct OutputTarget {
    std::string path;  // empty = stdout

    void write(const std::string& content) const {
        if (path.empty()) {
            std::cout << content;
            return;
        }
        std::ofstream f(path, std::ios::binary);
        if (!f) throw pmerge::parse_error("cannot open output file '" + path + "'");
        f << content;
    }
};

pmerge::PVector load_pvector(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw pmerge::parse_error("cannot open input file '" + path + "'");
    return pmerge::PVector::from_csv(f);
}

std::vector<std::string> split_csv_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(s);
    while (std::getline(ss, cur, ',')) {
        if (!cur.empty()) out.push_back(cur);
    }
    return out;
}

const std::vector<std::string> kDefaultMethods = {"bonferroni",    "simes",    "hommel",
                                                  "grid-harmonic", "m:r=-1",   "m-star:r=-1"};

int run_merge(const std::string& input, const std::string& method_str, const OutputTarget& out) {
    pmerge::MergeMethod method = pmerge::MergeMethod::parse(method_str);
    pmerge::PVector p = load_pvector(input);
    if (!method.universally_valid())
        std::cerr << "warning: '" << method_str
                  << "' is not universally valid under arbitrary dependence; "
                     "reported as a benchmark lower bound only\n";
    pmerge::MergeResult r = pmerge::evaluate(method, p);
    out.write(method_str + "," + format_double(r.p) + "," + format_double(r.accuracy_bound) +
              "\n");
    return 0;
}

int run_coeffs(double r, int K, const OutputTarget& out) {
    const pmerge::MCoefficients& c = pmerge::solve_m_coefficients(r, K);
    out.write(format_double(r) + "," + std::to_string(K) + "," + format_double(c.c) + "," +
              format_double(c.d) + "," + format_double(c.b) + "," + format_double(c.residual) +
              "\n");
    return 0;
}

std::string dm_to_csv(const pmerge::DiscoveryMatrix& dm) {
    std::string s = "l,j,p\n";
    for (int l = 1; l <= dm.corner; ++l)
        for (int j = 1; j <= l; ++j)
            s += std::to_string(l) + "," + std::to_string(j) + "," + format_double(dm.at(l, j)) +
                 "\n";
    return s;
}

std::string dm_categories_csv(const pmerge::DiscoveryMatrix& dm, const std::vector<double>& alphas) {
    auto buckets = pmerge::categorize(dm, alphas);
    std::string s = "l,j,bucket\n";
    for (int l = 1; l <= dm.corner; ++l)
        for (int j = 1; j <= l; ++j)
            s += std::to_string(l) + "," + std::to_string(j) + "," +
                 std::to_string(buckets[pmerge::DiscoveryMatrix::index(l, j)]) + "\n";
    return s;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"universally valid p-value merging under arbitrary dependence"};
    app.require_subcommand(1);

    // merge
    auto* merge = app.add_subcommand("merge", "merge a CSV of p-values with one method");
    std::string merge_input, merge_method, merge_out;
    merge->add_option("--input,-i", merge_input, "CSV file, one p-value per line")->required();
    merge->add_option("--method,-m", merge_method, "method spec, e.g. hommel, m:r=-1")->required();
    merge->add_option("--output,-o", merge_out, "output path (default stdout)");

    // coeffs
    auto* coeffs = app.add_subcommand("coeffs", "solve M-family coefficients c_r, d_r, b_rK");
    double coeffs_r = -1.0;
    int coeffs_K = 3;
    std::string coeffs_out;
    coeffs->add_option("--r", coeffs_r, "exponent r")->required();
    coeffs->add_option("--K", coeffs_K, "number of p-values")->required();
    coeffs->add_option("--output,-o", coeffs_out, "output path (default stdout)");

    // dm
    auto* dm = app.add_subcommand("dm", "GWGS true-discovery matrix");
    std::string dm_input, dm_family = "grid-harmonic", dm_out, dm_categories;
    int dm_corner = 120;
    std::vector<double> dm_alphas = {0.01, 0.05};
    int dm_model_K = 0, dm_model_K1 = 0, dm_median = 0;
    double dm_rho = 0.9, dm_mu = -5.0;
    std::uint64_t dm_seed = 42;
    bool dm_flip = true;
    dm->add_option("--input,-i", dm_input, "CSV of p-values (data mode)");
    dm->add_option("--family,-f", dm_family, "merging family spec")->required();
    dm->add_option("--corner", dm_corner, "corner size L (default 120)");
    dm->add_option("--alphas", dm_alphas, "ascending thresholds (default 0.01 0.05)");
    dm->add_option("--categories", dm_categories, "also write categorized CSV here");
    dm->add_option("--model-k", dm_model_K, "simulate: number of p-values");
    dm->add_option("--model-k1", dm_model_K1, "simulate: number of alternatives");
    dm->add_option("--rho", dm_rho, "simulate: bulk correlation (default 0.9)");
    dm->add_option("--mu-alt", dm_mu, "simulate: alternative mean (default -5)");
    dm->add_flag("--flip-last,!--no-flip-last", dm_flip, "anticorrelate last observation");
    dm->add_option("--median-of", dm_median, "element-wise median over N simulated runs");
    dm->add_option("--seed", dm_seed, "RNG seed (default 42)");
    dm->add_option("--output,-o", dm_out, "output path (default stdout)");

    // simulate
    auto* sim = app.add_subcommand("simulate", "reproduction harness");
    sim->require_subcommand(1);
    auto* cdf = sim->add_subcommand("cdf", "empirical CDF of merged p-values");
    int cdf_K = 1000, cdf_K1 = 10, cdf_reps = 10000, cdf_points = 512;
    double cdf_rho = 0.9, cdf_mu = -5.0, cdf_hi = 1.0;
    bool cdf_flip = true;
    std::string cdf_methods, cdf_out;
    std::uint64_t cdf_seed = 42;
    cdf->add_option("--K", cdf_K, "number of p-values");
    cdf->add_option("--K1", cdf_K1, "number of alternatives");
    cdf->add_option("--rho", cdf_rho, "bulk correlation");
    cdf->add_option("--mu-alt", cdf_mu, "alternative mean (default -5)");
    cdf->add_flag("--flip-last,!--no-flip-last", cdf_flip, "anticorrelate last observation");
    cdf->add_option("--reps", cdf_reps, "replications");
    cdf->add_option("--grid-points", cdf_points, "threshold grid size (default 512)");
    cdf->add_option("--grid-hi", cdf_hi, "upper end of the threshold grid (default 1)");
    long cdf_D = 0;
    cdf->add_option("--discretize", cdf_D, "snap inputs up to the 1/D grid first");
    cdf->add_option("--methods", cdf_methods, "comma-separated method specs");
    cdf->add_option("--seed", cdf_seed, "RNG seed (default 42)");
    cdf->add_option("--output,-o", cdf_out, "output path (default stdout)");

    auto* eps = sim->add_subcommand("epsilon", "borderline epsilon of the discrete scenario");
    int eps_K = 1000000, eps_K1 = 1000;
    double eps_alpha = 0.01;
    long eps_D = 0;
    std::string eps_methods, eps_out;
    eps->add_option("--K", eps_K, "number of p-values");
    eps->add_option("--K1", eps_K1, "number of small p-values");
    eps->add_option("--alpha", eps_alpha, "target combined p-value (default 0.01)");
    eps->add_option("--discretize", eps_D, "discretize inputs to the 1/D grid first");
    eps->add_option("--methods", eps_methods, "comma-separated method specs");
    eps->add_option("--output,-o", eps_out, "output path (default stdout)");

    // ratio
    auto* ratio = app.add_subcommand("ratio", "improvement ratios gamma_K and 1-(K-1)c_-1");
    int ratio_K = 3;
    std::string ratio_out;
    ratio->add_option("--K", ratio_K, "number of p-values")->required();
    ratio->add_option("--output,-o", ratio_out, "output path (default stdout)");

    // dominate
    auto* dom = app.add_subcommand("dominate", "domination verdicts inside the M-family");
    double dom_r = -1.0, dom_s = 0.0, dom_a = 0.0, dom_b = 0.0;
    int dom_K = 3;
    bool dom_scaled = false;
    std::string dom_out;
    dom->add_option("--r", dom_r, "first exponent")->required();
    dom->add_option("--s", dom_s, "second exponent")->required();
    dom->add_option("--K", dom_K, "number of p-values")->required();
    auto* opt_a = dom->add_option("--a", dom_a, "scale of the first mean (scaled mode)");
    auto* opt_b = dom->add_option("--b", dom_b, "scale of the second mean (scaled mode)");
    dom->add_option("--output,-o", dom_out, "output path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*merge) return run_merge(merge_input, merge_method, OutputTarget{merge_out});
        if (*coeffs) return run_coeffs(coeffs_r, coeffs_K, OutputTarget{coeffs_out});

        if (*dm) {
            pmerge::MergeMethod family = pmerge::MergeMethod::parse(dm_family);
            pmerge::DiscoveryMatrix matrix;
            std::string header;
            if (!dm_input.empty()) {
                pmerge::PVector p = load_pvector(dm_input);
                int corner = std::min(dm_corner, p.k());
                matrix = pmerge::discovery_matrix(p, family, corner, dm_alphas);
            } else {
                if (dm_model_K < 2) throw pmerge::parse_error("dm: need --input or --model-k");
                pmerge::ZTestModel model{dm_model_K, dm_model_K1, dm_mu, dm_rho, dm_flip, dm_seed};
                header = "# seed=" + std::to_string(dm_seed) + "\n";
                int runs = dm_median > 0 ? dm_median : 1;
                int corner = std::min(dm_corner, dm_model_K);
                matrix = pmerge::discovery_matrix_median(model, family, corner, runs, dm_alphas);
            }
            OutputTarget{dm_out}.write(header + dm_to_csv(matrix));
            if (!dm_categories.empty())
                OutputTarget{dm_categories}.write(header + dm_categories_csv(matrix, dm_alphas));
            return 0;
        }

        if (*cdf) {
            auto names = cdf_methods.empty() ? kDefaultMethods : split_csv_list(cdf_methods);
            pmerge::ZTestModel model{cdf_K, cdf_K1, cdf_mu, cdf_rho, cdf_flip, cdf_seed};
            auto grid = pmerge::default_cdf_grid(cdf_points, cdf_hi);
            std::string s = "# seed=" + std::to_string(cdf_seed) + "\nthreshold,method,fraction\n";
            for (const auto& name : names) {
                auto method = pmerge::MergeMethod::parse(name);
                auto curve = pmerge::empirical_cdf(model, method, cdf_reps, grid, cdf_D);
                for (const auto& pt : curve)
                    s += format_double(pt.threshold) + "," + name + "," +
                         format_double(pt.fraction) + "\n";
            }
            OutputTarget{cdf_out}.write(s);
            return 0;
        }

        if (*eps) {
            auto names = eps_methods.empty() ? kDefaultMethods : split_csv_list(eps_methods);
            pmerge::DiscreteScenario scen{eps_K, eps_K1, eps_alpha};
            std::string s = "method,K1,epsilon\n";
            for (const auto& name : names) {
                auto method = pmerge::MergeMethod::parse(name);
                std::string val;
                try {
                    val = format_double(pmerge::borderline_epsilon(scen, method, eps_D));
                } catch (const pmerge::no_rejection_error&) {
                    val = "nan";  // target unreachable for this method
                }
                s += name + "," + std::to_string(eps_K1) + "," + val + "\n";
            }
            OutputTarget{eps_out}.write(s);
            return 0;
        }

        if (*ratio) {
            std::string s = "K,gamma_K,harmonic_star_ratio\n" + std::to_string(ratio_K) + "," +
                            format_double(pmerge::gamma_K(ratio_K)) + "," +
                            format_double(pmerge::improvement_ratio_mstar(ratio_K)) + "\n";
            OutputTarget{ratio_out}.write(s);
            return 0;
        }

        if (*dom) {
            dom_scaled = (*opt_a) || (*opt_b);
            pmerge::DominationVerdict v;
            if (dom_scaled) {
                if (!(*opt_a) || !(*opt_b))
                    throw pmerge::parse_error("dominate: scaled mode needs both --a and --b");
                v = pmerge::m_scaled_domination(dom_r, dom_a, dom_s, dom_b, dom_K);
            } else {
                v = pmerge::m_family_domination(dom_r, dom_s, dom_K);
            }
            nlohmann::ordered_json j;
            j["relation"] = pmerge::to_string(v.relation);
            j["witness"] = v.witnesses;
            OutputTarget{dom_out}.write(j.dump(2) + "\n");
            return 0;
        }
    } catch (const pmerge::parse_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const pmerge::value_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const pmerge::length_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const pmerge::error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
