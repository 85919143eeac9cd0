#include "lifb/ablate.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "lifb/io_util.hpp"

namespace lifb {

std::vector<AblateVariant> default_ablate_grid() {
    std::vector<AblateVariant> g;
    g.push_back({"lif", NeuronModel::Lif, false, false, 1.0});
    g.push_back({"lifb", NeuronModel::Lifb, false, false, 1.0});
    g.push_back({"posneg", NeuronModel::PosNeg, false, false, 1.0});
    g.push_back({"scratch", NeuronModel::Lifb, true, false, 1.0});
    g.push_back({"fixed-0.5", NeuronModel::Lifb, false, true, 0.5});
    g.push_back({"fixed-1", NeuronModel::Lifb, false, true, 1.0});
    g.push_back({"fixed-1.5", NeuronModel::Lifb, false, true, 1.5});
    g.push_back({"fixed-2", NeuronModel::Lifb, false, true, 2.0});
    return g;
}

AblateReport run_ablation(const AblateConfig& cfg, const LabeledDataset& train_ds,
                          const LabeledDataset& val_ds) {
    if (cfg.variants.empty() || cfg.Ts.empty() || cfg.seeds.empty()) {
        throw std::invalid_argument("run_ablation: empty variant/T/seed grid");
    }
    AblateReport rep;
    for (const AblateVariant& v : cfg.variants) {
        for (size_t T : cfg.Ts) {
            for (uint64_t seed : cfg.seeds) {
                NetSpec spec = cfg.base;
                spec.model = v.model;
                spec.decoupled = v.decoupled;
                spec.kappa_frozen = v.kappa_frozen;
                spec.kappa_init = v.kappa_init;
                Rng rng(seed);
                Network net = build_network(spec, rng);

                TrainConfig tc = cfg.train;
                tc.T = T;
                tc.seed = seed;
                tc.checkpoint_path.clear();
                TrainResult res = train(net, train_ds, val_ds, tc);

                AblateRun run;
                run.variant = v.name;
                run.T = T;
                run.seed = seed;
                run.val_acc = res.best_val_acc;
                double ksum = 0;
                size_t kn = 0;
                for (double k : res.history.back().kappa_mean) {
                    if (std::isfinite(k)) {
                        ksum += k;
                        ++kn;
                    }
                }
                run.final_kappa_mean =
                    kn ? ksum / double(kn) : std::numeric_limits<double>::quiet_NaN();
                rep.runs.push_back(run);
                if (cfg.verbose) {
                    std::printf("%-10s T=%zu seed=%llu  best val acc %.4f\n", v.name.c_str(), T,
                                (unsigned long long)seed, run.val_acc);
                    std::fflush(stdout);
                }
            }
        }
    }
    return rep;
}

static std::vector<double> cell_accs(const AblateReport& rep, const std::string& variant,
                                     size_t T) {
    std::vector<double> out;
    for (const auto& r : rep.runs) {
        if (r.variant == variant && r.T == T) out.push_back(r.val_acc);
    }
    if (out.empty()) {
        throw std::invalid_argument("ablation report has no runs for variant '" + variant +
                                    "' at T=" + std::to_string(T));
    }
    return out;
}

double ablate_mean_acc(const AblateReport& rep, const std::string& variant, size_t T) {
    const auto a = cell_accs(rep, variant, T);
    double s = 0;
    for (double v : a) s += v;
    return s / double(a.size());
}

double ablate_std_acc(const AblateReport& rep, const std::string& variant, size_t T) {
    const auto a = cell_accs(rep, variant, T);
    if (a.size() < 2) return 0.0;
    const double m = ablate_mean_acc(rep, variant, T);
    double sq = 0;
    for (double v : a) sq += (v - m) * (v - m);
    return std::sqrt(sq / double(a.size() - 1));
}

std::string ablate_runs_csv(const AblateReport& rep) {
    CsvTable t;
    t.header = {"variant", "T", "seed", "val_acc", "final_kappa_mean"};
    for (const auto& r : rep.runs) {
        t.rows.push_back({r.variant, std::to_string(r.T), std::to_string(r.seed),
                          format_real(r.val_acc), format_real(r.final_kappa_mean)});
    }
    return t.to_string();
}

std::string ablate_summary_csv(const AblateReport& rep, const std::vector<size_t>& Ts) {
    std::vector<std::string> variants;
    for (const auto& r : rep.runs) {
        bool seen = false;
        for (const auto& v : variants) {
            if (v == r.variant) seen = true;
        }
        if (!seen) variants.push_back(r.variant);
    }
    CsvTable t;
    t.header = {"variant"};
    for (size_t T : Ts) t.header.push_back("acc@T=" + std::to_string(T));
    for (const auto& v : variants) {
        std::vector<std::string> row = {v};
        for (size_t T : Ts) {
            const double m = 100.0 * ablate_mean_acc(rep, v, T);
            const double s = 100.0 * ablate_std_acc(rep, v, T);
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%.2f+-%.2f", m, s);
            row.push_back(buf);
        }
        t.rows.push_back(std::move(row));
    }
    return t.to_string();
}

} // namespace lifb
