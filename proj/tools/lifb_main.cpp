// Command-line front end: train / eval / ablate / capacity / simulate /
// decouple / verify / raster. Every subcommand accepts --config FILE (flat
// key=value, keys = long option names without dashes; flags override file
// values) and writes the resolved configuration next to its outputs.
//
// Exit codes: 0 success, 1 usage error, 2 runtime/validation failure.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "lifb/ablate.hpp"
#include "lifb/capacity.hpp"
#include "lifb/checkpoint.hpp"
#include "lifb/data.hpp"
#include "lifb/decouple.hpp"
#include "lifb/io_util.hpp"
#include "lifb/ode.hpp"
#include "lifb/train.hpp"

using namespace lifb;

namespace {

int g_exit = 0;

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else if (c != ' ') {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

std::vector<size_t> parse_size_list(const std::string& s, const std::string& what) {
    std::vector<size_t> out;
    for (const auto& tok : split_list(s)) {
        size_t pos = 0;
        unsigned long v = std::stoul(tok, &pos);
        if (pos != tok.size()) throw std::invalid_argument(what + ": bad entry '" + tok + "'");
        out.push_back(v);
    }
    return out;
}

std::vector<double> parse_double_list(const std::string& s, const std::string& what) {
    std::vector<double> out;
    for (const auto& tok : split_list(s)) {
        size_t pos = 0;
        double v = std::stod(tok, &pos);
        if (pos != tok.size()) throw std::invalid_argument(what + ": bad entry '" + tok + "'");
        out.push_back(v);
    }
    return out;
}

void write_outputs_dir(CLI::App* cmd, const std::string& out) {
    std::filesystem::create_directories(out);
    atomic_write_file(out + "/resolved.cfg", cmd->config_to_str(true, false));
}

// CLI11 only processes config files owned by the root command, so each
// subcommand funnels its own --config through here at the top of its
// callback. Keys are flat long-option names; values given on the command
// line are already bound and win over the file.
void apply_config_file(CLI::App* cmd) {
    CLI::Option* copt = cmd->get_config_ptr();
    if (copt == nullptr || copt->empty()) return;
    const std::string path = copt->as<std::string>();
    std::ifstream in(path);
    if (!in) throw CLI::FileError::Missing(path);
    for (const CLI::ConfigItem& item : cmd->get_config_formatter()->from_config(in)) {
        if (!item.parents.empty()) {
            throw CLI::ConfigError(item.fullname() + ": config keys must be flat");
        }
        CLI::Option* op = cmd->get_option_no_throw("--" + item.name);
        if (op == nullptr) throw CLI::ConfigError(item.name + ": unknown config key");
        if (!op->empty()) continue;
        if (op->get_expected_min() == 0 && item.inputs.size() <= 1) {
            std::string res = cmd->get_config_formatter()->to_flag(item);
            res = op->get_flag_value(item.name, res);
            op->add_result(res);
        } else {
            for (const std::string& v : item.inputs) op->add_result(v);
        }
        op->run_callback();
    }
}

// ---------- shared option groups ----------

struct DataOpts {
    std::string dataset = "synth-bars";
    std::string train_images, train_labels, test_images, test_labels;
    size_t synth_n = 256;
    size_t synth_d = 16;

    void attach(CLI::App* c) {
        c->add_option("--dataset", dataset, "synth-bars | synth-gaussians | idx")
            ->capture_default_str();
        c->add_option("--train-images", train_images, "IDX3 image file, train split");
        c->add_option("--train-labels", train_labels, "IDX1 label file, train split");
        c->add_option("--test-images", test_images, "IDX3 image file, test split");
        c->add_option("--test-labels", test_labels, "IDX1 label file, test split");
        c->add_option("--synth-n", synth_n, "synthetic train-set size")->capture_default_str();
        c->add_option("--synth-d", synth_d, "synthetic feature count (gaussians)")
            ->capture_default_str();
    }

    size_t test_count() const {
        size_t n = synth_n / 2;
        n -= n % 2;
        return std::max<size_t>(4, n);
    }

    // Loads both splits and normalizes each with train-split statistics.
    void load(LabeledDataset& tr, LabeledDataset& te) const {
        if (dataset == "synth-gaussians") {
            tr = synth_gaussians(synth_n, synth_d, 1000);
            te = synth_gaussians(test_count(), synth_d, 2000);
        } else if (dataset == "synth-bars") {
            tr = synth_bars(synth_n, 1000);
            te = synth_bars(test_count(), 2000);
        } else if (dataset == "idx") {
            if (train_images.empty() || train_labels.empty() || test_images.empty() ||
                test_labels.empty()) {
                throw std::invalid_argument(
                    "dataset=idx needs --train-images/--train-labels/--test-images/--test-labels");
            }
            tr = load_idx(train_images, train_labels);
            te = load_idx(test_images, test_labels);
        } else {
            throw std::invalid_argument("unknown dataset '" + dataset +
                                        "' (synth-bars | synth-gaussians | idx)");
        }
        tr.split = "train";
        te.split = "test";
        const size_t classes = std::max(tr.classes, te.classes);
        tr.classes = te.classes = classes;
        const NormStats st = compute_norm_stats(tr);
        normalize(tr, st);
        normalize(te, st);
    }
};

struct NeuronOpts {
    std::string neuron = "lifb";
    double tau = 2.0, v_th = 0.5, v_h = 1.0, v_rst = 0.0, width = 0.5;

    void attach(CLI::App* c, bool with_model = true) {
        if (with_model) {
            c->add_option("--neuron", neuron, "lif | lifb | posneg")->capture_default_str();
        }
        c->add_option("--tau", tau, "membrane time constant")->capture_default_str();
        c->add_option("--v-th", v_th, "spike threshold")->capture_default_str();
        c->add_option("--v-h", v_h, "burst threshold")->capture_default_str();
        c->add_option("--v-rst", v_rst, "reset potential")->capture_default_str();
        c->add_option("--surrogate-width", width, "rectangular surrogate half-width")
            ->capture_default_str();
    }

    NeuronParams params() const {
        NeuronParams p;
        p.tau = tau;
        p.v_th = v_th;
        p.v_h = v_h;
        p.v_rst = v_rst;
        p.surrogate_width = width;
        return p;
    }
};

struct HyperOpts {
    size_t epochs = 10, batch = 64;
    double lr = 0.1, lr_kappa = -1.0, momentum = 0.9, weight_decay = 0.0;
    bool no_shuffle = false;

    void attach(CLI::App* c) {
        c->add_option("--epochs", epochs)->capture_default_str();
        c->add_option("--batch", batch)->capture_default_str();
        c->add_option("--lr", lr, "weight learning rate")->capture_default_str();
        c->add_option("--lr-kappa", lr_kappa, "burst-intensity learning rate (-1: use --lr)")
            ->capture_default_str();
        c->add_option("--momentum", momentum)->capture_default_str();
        c->add_option("--weight-decay", weight_decay, "weights only, never burst intensities")
            ->capture_default_str();
        c->add_flag("--no-shuffle", no_shuffle, "keep dataset order within epochs");
    }

    OptimConfig optim() const {
        OptimConfig o;
        o.lr = lr;
        o.lr_kappa = lr_kappa;
        o.momentum = momentum;
        o.weight_decay = weight_decay;
        return o;
    }
};

NetSpec make_spec(const std::string& arch, size_t hidden, const LabeledDataset& tr,
                  NeuronModel model, const NeuronParams& p) {
    NetSpec spec;
    spec.arch = arch;
    spec.input_shape = {tr.images.dim(1), tr.images.dim(2), tr.images.dim(3)};
    spec.classes = tr.classes;
    spec.hidden = hidden;
    spec.model = model;
    spec.params = p;
    return spec;
}

std::string firing_line(const LayerFiring& f) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "  %-12s rest %.4f  regular %.4f  burst %.4f  negative %.4f",
                  f.name.c_str(), f.rest, f.regular, f.burst, f.negative);
    return buf;
}

// ---------- train ----------

struct TrainState {
    std::string out = "out-train";
    std::string arch = "mlp";
    size_t hidden = 32;
    std::string kappa_policy = "learnable";
    double kappa_init = 1.0;
    bool decoupled = false;
    size_t steps = 2;
    uint64_t seed = 1;
    bool quiet = false;
    DataOpts data;
    NeuronOpts neuron;
    HyperOpts hyper;
};

void setup_train(CLI::App& app) {
    auto st = std::make_shared<TrainState>();
    CLI::App* c = app.add_subcommand("train", "Train a spiking network");
    c->set_config("--config");
    c->add_option("--out", st->out, "output directory")->capture_default_str();
    c->add_option("--arch", st->arch, "snn6-small | mlp")->capture_default_str();
    c->add_option("--hidden", st->hidden, "mlp hidden width")->capture_default_str();
    c->add_option("--steps", st->steps, "simulation length T")->capture_default_str();
    c->add_option("--seed", st->seed)->capture_default_str();
    c->add_option("--kappa-policy", st->kappa_policy, "learnable | fixed")->capture_default_str();
    c->add_option("--kappa-init", st->kappa_init, "initial burst intensity")
        ->capture_default_str();
    c->add_flag("--decoupled", st->decoupled, "build the two-unit pair topology from scratch");
    c->add_flag("--quiet", st->quiet, "suppress per-epoch progress");
    st->data.attach(c);
    st->neuron.attach(c);
    st->hyper.attach(c);

    c->callback([st, c]() {
        apply_config_file(c);
        if (st->kappa_policy != "learnable" && st->kappa_policy != "fixed") {
            throw std::invalid_argument("--kappa-policy must be learnable or fixed");
        }
        LabeledDataset tr, te;
        st->data.load(tr, te);
        NetSpec spec = make_spec(st->arch, st->hidden, tr,
                                 neuron_model_from_string(st->neuron.neuron),
                                 st->neuron.params());
        spec.decoupled = st->decoupled;
        spec.kappa_frozen = st->kappa_policy == "fixed";
        spec.kappa_init = st->kappa_init;
        write_outputs_dir(c, st->out);

        Rng rng(st->seed);
        Network net = build_network(spec, rng);
        TrainConfig tc;
        tc.epochs = st->hyper.epochs;
        tc.batch_size = st->hyper.batch;
        tc.T = st->steps;
        tc.seed = st->seed;
        tc.shuffle = !st->hyper.no_shuffle;
        tc.optim = st->hyper.optim();
        tc.checkpoint_path = st->out + "/checkpoint.bin";
        tc.verbose = !st->quiet;
        TrainResult res = train(net, tr, te, tc);
        atomic_write_file(st->out + "/metrics.csv", metrics_to_csv(res.history));
        std::printf("best val acc %.4f at epoch %zu\n", res.best_val_acc, res.best_epoch);
        std::printf("wrote %s/checkpoint.bin and %s/metrics.csv\n", st->out.c_str(),
                    st->out.c_str());
    });
}

// ---------- eval ----------

struct EvalState {
    std::string out = "out-eval";
    std::string checkpoint;
    std::string split = "test";
    size_t steps = 2;
    DataOpts data;
};

void setup_eval(CLI::App& app) {
    auto st = std::make_shared<EvalState>();
    CLI::App* c = app.add_subcommand("eval", "Evaluate a checkpoint");
    c->set_config("--config");
    c->add_option("--out", st->out, "output directory")->capture_default_str();
    c->add_option("--checkpoint", st->checkpoint, "checkpoint file")->required();
    c->add_option("--split", st->split, "train | test")->capture_default_str();
    c->add_option("--steps", st->steps, "simulation length T")->capture_default_str();
    st->data.attach(c);

    c->callback([st, c]() {
        apply_config_file(c);
        Network net = restore_network(load_checkpoint(st->checkpoint));
        LabeledDataset tr, te;
        st->data.load(tr, te);
        LabeledDataset& ds = st->split == "train" ? tr : te;
        if (st->split != "train" && st->split != "test") {
            throw std::invalid_argument("--split must be train or test");
        }
        write_outputs_dir(c, st->out);
        EvalMetrics m = evaluate(net, ds, st->steps);

        CsvTable csv;
        csv.header = {"split", "steps", "loss", "accuracy"};
        std::vector<std::string> row = {st->split, std::to_string(st->steps),
                                        format_real(m.loss), format_real(m.accuracy)};
        for (const auto& f : m.firing) {
            for (const char* part : {".rest", ".regular", ".burst", ".negative"}) {
                csv.header.push_back(f.name + part);
            }
            row.push_back(format_real(f.rest));
            row.push_back(format_real(f.regular));
            row.push_back(format_real(f.burst));
            row.push_back(format_real(f.negative));
        }
        csv.rows.push_back(row);
        atomic_write_file(st->out + "/eval.csv", csv.to_string());

        std::printf("split %s  steps %zu  loss %.6f  accuracy %.6f\n", st->split.c_str(),
                    st->steps, m.loss, m.accuracy);
        for (const auto& f : m.firing) std::printf("%s\n", firing_line(f).c_str());
    });
}

// ---------- ablate ----------

struct AblateState {
    std::string out = "out-ablate";
    std::string arch = "snn6-small";
    size_t hidden = 32;
    std::string steps_list = "1,2,4";
    std::string seeds = "1,2,3";
    std::string variants; // empty = full grid
    bool quiet = false;
    DataOpts data;
    NeuronOpts neuron; // thresholds only; the grid picks models
    HyperOpts hyper;
};

void setup_ablate(CLI::App& app) {
    auto st = std::make_shared<AblateState>();
    CLI::App* c = app.add_subcommand("ablate", "Neuron-type x T x seed training grid");
    c->set_config("--config");
    c->add_option("--out", st->out, "output directory")->capture_default_str();
    c->add_option("--arch", st->arch, "snn6-small | mlp")->capture_default_str();
    c->add_option("--hidden", st->hidden, "mlp hidden width")->capture_default_str();
    c->add_option("--steps-list", st->steps_list, "comma-separated T values")
        ->capture_default_str();
    c->add_option("--seeds", st->seeds, "comma-separated seeds")->capture_default_str();
    c->add_option("--variants", st->variants,
                  "subset of lif,lifb,posneg,scratch,fixed-0.5,fixed-1,fixed-1.5,fixed-2");
    c->add_flag("--quiet", st->quiet, "suppress per-run progress");
    st->data.attach(c);
    st->neuron.attach(c, false);
    st->hyper.attach(c);

    c->callback([st, c]() {
        apply_config_file(c);
        LabeledDataset tr, te;
        st->data.load(tr, te);
        AblateConfig ac;
        ac.base = make_spec(st->arch, st->hidden, tr, NeuronModel::Lifb, st->neuron.params());
        ac.train.epochs = st->hyper.epochs;
        ac.train.batch_size = st->hyper.batch;
        ac.train.optim = st->hyper.optim();
        ac.train.shuffle = !st->hyper.no_shuffle;
        ac.Ts = parse_size_list(st->steps_list, "--steps-list");
        std::vector<uint64_t> seeds;
        for (size_t s : parse_size_list(st->seeds, "--seeds")) seeds.push_back(s);
        ac.seeds = seeds;
        ac.verbose = !st->quiet;
        if (!st->variants.empty()) {
            std::vector<AblateVariant> chosen;
            for (const auto& name : split_list(st->variants)) {
                bool found = false;
                for (const auto& v : default_ablate_grid()) {
                    if (v.name == name) {
                        chosen.push_back(v);
                        found = true;
                    }
                }
                if (!found) {
                    throw std::invalid_argument(
                        "unknown variant '" + name +
                        "' (lif,lifb,posneg,scratch,fixed-0.5,fixed-1,fixed-1.5,fixed-2)");
                }
            }
            ac.variants = chosen;
        }
        write_outputs_dir(c, st->out);
        AblateReport rep = run_ablation(ac, tr, te);
        atomic_write_file(st->out + "/runs.csv", ablate_runs_csv(rep));
        const std::string summary = ablate_summary_csv(rep, ac.Ts);
        atomic_write_file(st->out + "/summary.csv", summary);
        std::printf("%s", summary.c_str());
    });
}

// ---------- capacity ----------

struct CapacityState {
    std::string out = "out-capacity";
    size_t tmax = 3;
    std::string n_list = "2";
    std::string kappa = "1.5,2";
    std::string from_checkpoint;
    size_t threads = 0;
    bool allow_large = false;
};

void setup_capacity(CLI::App& app) {
    auto st = std::make_shared<CapacityState>();
    CLI::App* c = app.add_subcommand(
        "capacity", "Exact threshold-function counts and capacity bounds for spike alphabets");
    c->set_config("--config");
    c->add_option("--out", st->out, "output directory")->capture_default_str();
    c->add_option("--tmax", st->tmax, "sequence lengths 1..tmax")->capture_default_str();
    c->add_option("--n", st->n_list, "comma-separated alphabet sizes in [2,4]")
        ->capture_default_str();
    c->add_option("--kappa", st->kappa, "extra alphabet values beyond {0,1}")
        ->capture_default_str();
    c->add_option("--from-checkpoint", st->from_checkpoint,
                  "take kappa values from a trained checkpoint's burst layers");
    c->add_option("--threads", st->threads, "0: use LIFB_THREADS or 1")->capture_default_str();
    c->add_flag("--allow-large", st->allow_large, "lift the exact-count budget to n^t <= 20");

    c->callback([st, c]() {
        apply_config_file(c);
        std::vector<double> kappas;
        if (!st->from_checkpoint.empty()) {
            Network net = restore_network(load_checkpoint(st->from_checkpoint));
            for (auto& l : net.layers) {
                double sum = 0;
                size_t cnt = 0;
                if (auto* nl = dynamic_cast<NeuronLayer*>(l.get())) {
                    if (nl->model != NeuronModel::Lifb) continue;
                    for (size_t i = 0; i < nl->kappa.value.size(); ++i) {
                        sum += double(nl->kappa.value.data()[i]);
                        ++cnt;
                    }
                } else if (auto* pl = dynamic_cast<PairLayer*>(l.get())) {
                    for (size_t i = 0; i < pl->wb.value.size(); ++i) {
                        sum += 1.0 + double(pl->wb.value.data()[i]);
                        ++cnt;
                    }
                } else {
                    continue;
                }
                kappas.push_back(sum / double(cnt));
            }
            if (kappas.empty()) {
                throw std::invalid_argument("checkpoint has no burst layers to take kappa from");
            }
            std::printf("kappa from checkpoint:");
            for (double k : kappas) std::printf(" %s", format_real(k).c_str());
            std::printf("\n");
        } else {
            kappas = parse_double_list(st->kappa, "--kappa");
        }
        const std::vector<size_t> ns = parse_size_list(st->n_list, "--n");
        write_outputs_dir(c, st->out);
        const auto rows = capacity_curve(st->tmax, ns, kappas, st->threads, st->allow_large);
        const std::string csv = capacity_rows_to_csv(rows).to_string();
        atomic_write_file(st->out + "/capacity.csv", csv);
        atomic_write_file(st->out + "/capacity.svg", capacity_rows_to_svg(rows));
        std::printf("%s", csv.c_str());
    });
}

// ---------- simulate ----------

struct SimulateState {
    std::string out = "out-simulate";
    BurstOdeParams p;
    double dt = 0.01;
    size_t steps = 20000;
    double current = 0.6;
    size_t current_start = 0;
};

void setup_simulate(CLI::App& app) {
    auto st = std::make_shared<SimulateState>();
    CLI::App* c = app.add_subcommand("simulate", "Integrate the burst neuron ODE");
    c->set_config("--config");
    c->add_option("--out", st->out, "output directory")->capture_default_str();
    c->add_option("--tau", st->p.tau, "membrane time constant")->capture_default_str();
    c->add_option("--v-th", st->p.v_th, "spike threshold")->capture_default_str();
    c->add_option("--v-rst", st->p.v_rst, "reset potential")->capture_default_str();
    c->add_option("--gate", st->p.v_h, "T-current activation gate (below threshold)")
        ->capture_default_str();
    c->add_option("--g", st->p.g, "T-current conductance (0 disables bursting)")
        ->capture_default_str();
    c->add_option("--v-t", st->p.v_T, "T-current target potential")->capture_default_str();
    c->add_option("--tau-plus", st->p.tau_plus, "deactivation recovery time constant")
        ->capture_default_str();
    c->add_option("--tau-minus", st->p.tau_minus, "deactivation decay time constant")
        ->capture_default_str();
    c->add_option("--h0", st->p.h0, "initial deactivation state")->capture_default_str();
    c->add_option("--dt", st->dt, "Euler step")->capture_default_str();
    c->add_option("--steps", st->steps)->capture_default_str();
    c->add_option("--current", st->current, "constant input current")->capture_default_str();
    c->add_option("--current-start", st->current_start, "step at which the current switches on")
        ->capture_default_str();

    c->callback([st, c]() {
        apply_config_file(c);
        write_outputs_dir(c, st->out);
        std::vector<double> I(st->steps, 0.0);
        for (size_t i = st->current_start; i < st->steps; ++i) I[i] = st->current;
        OdeTrace tr = lifb_ode_simulate(I, st->p, st->dt, st->steps);

        CsvTable csv;
        csv.header = {"step", "time", "I", "v", "h", "spike"};
        std::vector<char> spike(st->steps, 0);
        for (size_t s : tr.spike_steps) spike[s] = 1;
        for (size_t i = 0; i < st->steps; ++i) {
            csv.rows.push_back({std::to_string(i), format_real(double(i + 1) * st->dt),
                                format_real(I[i]), format_real(tr.v[i]), format_real(tr.h[i]),
                                spike[i] ? "1" : "0"});
        }
        atomic_write_file(st->out + "/trace.csv", csv.to_string());

        // v and h over time, spikes as ticks along the top.
        const double W = 720, H = 300, ML = 45, MR = 10, MT = 14, MB = 24;
        double vmin = 0, vmax = st->p.v_th;
        for (double v : tr.v) {
            vmin = std::min(vmin, v);
            vmax = std::max(vmax, v);
        }
        SvgBuilder svg(W, H);
        auto X = [&](size_t i) {
            return ML + (W - ML - MR) * double(i) / double(st->steps > 1 ? st->steps - 1 : 1);
        };
        auto Y = [&](double v) { return H - MB - (H - MB - MT) * (v - vmin) / (vmax - vmin); };
        svg.line(ML, H - MB, W - MR, H - MB, "#888", 1);
        svg.line(ML, MT, ML, H - MB, "#888", 1);
        std::vector<std::pair<double, double>> vp, hp;
        for (size_t i = 0; i < st->steps; ++i) {
            vp.emplace_back(X(i), Y(tr.v[i]));
            hp.emplace_back(X(i), Y(vmin + tr.h[i] * (vmax - vmin)));
        }
        svg.polyline(vp, "#1f77b4", 1.0);
        svg.polyline(hp, "#2ca02c", 0.8);
        for (size_t s : tr.spike_steps) svg.line(X(s), MT, X(s), MT + 8, "#d62728", 1);
        svg.text(ML + 4, MT + 10, "v", 11);
        svg.text(ML + 18, MT + 10, "h (scaled)", 11);
        atomic_write_file(st->out + "/trace.svg", svg.finish());

        const auto isi = spike_intervals(tr.spike_steps, st->dt);
        std::printf("steps %zu  dt %s  spikes %zu\n", st->steps, format_real(st->dt).c_str(),
                    tr.spike_steps.size());
        if (isi.size() >= 13) {
            IsiSummary s = isi_summary(isi, 3, 10);
            std::printf("initial ISI mean %.4f  tail ISI mean %.4f  ratio %.4f  tail CoV %.4f\n",
                        s.initial_mean, s.tail_mean, s.initial_mean / s.tail_mean, s.tail_cov);
        } else if (isi.size() >= 2) {
            double mean = 0;
            for (double d : isi) mean += d;
            mean /= double(isi.size());
            std::printf("ISI mean %.4f over %zu intervals\n", mean, isi.size());
        }
        std::printf("wrote %s/trace.csv and %s/trace.svg\n", st->out.c_str(), st->out.c_str());
    });
}

// ---------- decouple ----------

struct DecoupleState {
    std::string out = "out-decouple";
    std::string checkpoint;
};

void setup_decouple(CLI::App& app) {
    auto st = std::make_shared<DecoupleState>();
    CLI::App* c = app.add_subcommand(
        "decouple", "Rewrite a checkpoint's burst layers as binary threshold pairs");
    c->set_config("--config");
    c->add_option("--out", st->out, "output directory")->capture_default_str();
    c->add_option("--checkpoint", st->checkpoint, "checkpoint file")->required();

    c->callback([st, c]() {
        apply_config_file(c);
        Checkpoint ck = load_checkpoint(st->checkpoint);
        Network net = restore_network(ck);
        std::string warn;
        Network dec = decouple_network(net, &warn);
        if (!warn.empty()) std::fprintf(stderr, "warning: %s", warn.c_str());
        write_outputs_dir(c, st->out);
        Checkpoint out = make_checkpoint(dec, nullptr, nullptr, ck.epoch, ck.step,
                                         ck.metrics_csv);
        out.rng_state = ck.rng_state;
        save_checkpoint(out, st->out + "/checkpoint.bin");
        std::printf("wrote %s/checkpoint.bin\n", st->out.c_str());
    });
}

// ---------- verify ----------

struct VerifyState {
    std::string out = "out-verify";
    std::string checkpoint;
    size_t inputs = 64;
    std::string steps_list = "1,2,4,6";
    uint64_t seed = 7;
};

void setup_verify(CLI::App& app) {
    auto st = std::make_shared<VerifyState>();
    CLI::App* c = app.add_subcommand(
        "verify", "Prove a checkpoint and its decoupled image emit identical outputs");
    c->set_config("--config");
    c->add_option("--out", st->out, "output directory")->capture_default_str();
    c->add_option("--checkpoint", st->checkpoint, "checkpoint file")->required();
    c->add_option("--inputs", st->inputs, "random input count")->capture_default_str();
    c->add_option("--steps-list", st->steps_list, "comma-separated T values")
        ->capture_default_str();
    c->add_option("--seed", st->seed, "input noise seed")->capture_default_str();

    c->callback([st, c]() {
        apply_config_file(c);
        Network net = restore_network(load_checkpoint(st->checkpoint));
        std::string warn;
        Network dec = decouple_network(net, &warn);
        if (!warn.empty()) std::fprintf(stderr, "warning: %s", warn.c_str());

        std::vector<size_t> shape = {st->inputs};
        for (size_t d : net.spec.input_shape) shape.push_back(d);
        Tensor batch(shape);
        Rng rng(st->seed);
        rng.fill_normal(batch, 0.0, 1.0);

        const std::vector<size_t> Ts = parse_size_list(st->steps_list, "--steps-list");
        EquivalenceReport rep = verify_equivalence(net, dec, {batch}, Ts);

        std::string report;
        for (size_t i = 0; i < rep.layer_names.size(); ++i) {
            report += "layer " + rep.layer_names[i] +
                      ": max emission deviation = " + format_real(rep.layer_devs[i]) + "\n";
        }
        report += "max logits deviation = " + format_real(rep.max_logits_dev) + "\n";
        report += rep.exact ? "PASS: decoupled network is bit-exact\n"
                            : "FAIL: decoupled network deviates\n";
        write_outputs_dir(c, st->out);
        atomic_write_file(st->out + "/verify.txt", report);
        std::printf("%s", report.c_str());
        if (!rep.exact) g_exit = 2;
    });
}

// ---------- raster ----------

struct RasterState {
    std::string out = "out-raster";
    std::string checkpoint;
    std::string layers; // empty = all spiking layers; else indices into them
    size_t steps = 6;
    size_t samples = 1;
    size_t neurons = 50;
    uint64_t seed = 7;
    DataOpts data;
};

void setup_raster(CLI::App& app) {
    auto st = std::make_shared<RasterState>();
    CLI::App* c =
        app.add_subcommand("raster", "Export spike rasters of random neurons per layer");
    c->set_config("--config");
    c->add_option("--out", st->out, "output directory")->capture_default_str();
    c->add_option("--checkpoint", st->checkpoint, "checkpoint file")->required();
    c->add_option("--layers", st->layers, "comma-separated spiking-layer indices (default all)");
    c->add_option("--steps", st->steps, "simulation length T")->capture_default_str();
    c->add_option("--samples", st->samples, "number of test images")->capture_default_str();
    c->add_option("--neurons", st->neurons, "neurons drawn per layer")->capture_default_str();
    c->add_option("--seed", st->seed, "neuron selection seed")->capture_default_str();
    st->data.attach(c);

    c->callback([st, c]() {
        apply_config_file(c);
        Network net = restore_network(load_checkpoint(st->checkpoint));
        LabeledDataset tr, te;
        st->data.load(tr, te);
        if (st->samples == 0 || st->samples > te.size()) {
            throw std::invalid_argument("--samples must lie in [1," + std::to_string(te.size()) +
                                        "]");
        }
        std::vector<size_t> idx(st->samples);
        std::iota(idx.begin(), idx.end(), size_t(0));
        Tensor images;
        std::vector<int> labels;
        gather_batch(te, idx, images, labels);

        SpikeRaster raster;
        PassCtx pc;
        pc.T = st->steps;
        pc.raster = &raster;
        net.forward(images, pc);

        std::vector<size_t> chosen_layers;
        if (st->layers.empty()) {
            chosen_layers.resize(raster.layers.size());
            std::iota(chosen_layers.begin(), chosen_layers.end(), size_t(0));
        } else {
            chosen_layers = parse_size_list(st->layers, "--layers");
            for (size_t li : chosen_layers) {
                if (li >= raster.layers.size()) {
                    throw std::invalid_argument(
                        "--layers index " + std::to_string(li) + " out of range; network has " +
                        std::to_string(raster.layers.size()) + " spiking layers");
                }
            }
        }

        // One seeded draw per layer, shared by every sample.
        Rng sel(st->seed);
        std::vector<std::vector<size_t>> picks;
        for (size_t li : chosen_layers) {
            std::vector<size_t> rows(raster.layers[li].rows);
            std::iota(rows.begin(), rows.end(), size_t(0));
            sel.shuffle(rows);
            rows.resize(std::min<size_t>(st->neurons, rows.size()));
            std::sort(rows.begin(), rows.end());
            picks.push_back(std::move(rows));
        }

        write_outputs_dir(c, st->out);
        static const char* colors[4] = {"#ffffff", "#1f77b4", "#d62728", "#ff7f0e"};
        for (size_t s = 0; s < st->samples; ++s) {
            CsvTable csv;
            csv.header = {"layer", "name", "row"};
            for (size_t t = 0; t < st->steps; ++t) csv.header.push_back("t" + std::to_string(t));

            size_t total_rows = 0;
            for (const auto& p : picks) total_rows += p.size();
            const double cell = 8, gap = 14, left = 120, top = 16;
            SvgBuilder svg(left + cell * double(st->steps) + 20,
                           top + cell * double(total_rows) + gap * double(picks.size()) + 20);
            double y = top;
            for (size_t k = 0; k < chosen_layers.size(); ++k) {
                const SpikeRasterLayer& rl = raster.layers[chosen_layers[k]];
                svg.text(4, y + 9, rl.name, 10);
                for (size_t row : picks[k]) {
                    std::vector<std::string> line = {std::to_string(chosen_layers[k]), rl.name,
                                                     std::to_string(row)};
                    for (size_t t = 0; t < st->steps; ++t) {
                        const uint8_t code = rl.code(t, s, row);
                        line.push_back(std::to_string(int(code)));
                        if (code != 0) {
                            svg.rect(left + cell * double(t), y, cell - 1, cell - 1,
                                     colors[code < 4 ? code : 3]);
                        }
                    }
                    csv.rows.push_back(std::move(line));
                    y += cell;
                }
                y += gap;
            }
            atomic_write_file(st->out + "/raster-" + std::to_string(s) + ".csv",
                              csv.to_string());
            atomic_write_file(st->out + "/raster-" + std::to_string(s) + ".svg", svg.finish());
        }
        std::printf("wrote %zu raster file pair(s) under %s\n", st->samples, st->out.c_str());
    });
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spiking-network engine: LIF / LIFB / PosNeg training, burst decoupling, "
                 "information-capacity analysis, burst ODE simulation"};
    app.require_subcommand(1);
    setup_train(app);
    setup_eval(app);
    setup_ablate(app);
    setup_capacity(app);
    setup_simulate(app);
    setup_decouple(app);
    setup_verify(app);
    setup_raster(app);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return g_exit;
}
