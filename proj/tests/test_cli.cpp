#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <string>

#include "lifb/checkpoint.hpp"
#include "lifb/io_util.hpp"
#include "lifb/train.hpp"
#include "test_paths.hpp"

using namespace lifb;

namespace {

struct CmdResult {
    int code = -1;
    std::string out;
    std::string err;
};

CmdResult run_cli(const std::string& args) {
    const std::string so = temp_dir() + "/cli-stdout.txt";
    const std::string se = temp_dir() + "/cli-stderr.txt";
    const std::string cmd = cli_path() + " " + args + " >" + so + " 2>" + se;
    const int rc = std::system(cmd.c_str());
    CmdResult r;
    r.code = (rc >= 0 && (rc & 0x7f) == 0) ? ((rc >> 8) & 0xff) : -1;
    r.out = read_file(so);
    r.err = read_file(se);
    return r;
}

std::string fresh_dir(const std::string& name) {
    const std::string d = temp_dir() + "/" + name;
    std::filesystem::remove_all(d);
    return d;
}

const std::string kGaussArgs =
    " --dataset synth-gaussians --synth-n 64 --synth-d 8 ";

// Splits raw CSV records into header + body rows.
CsvTable table_of(const std::string& text) {
    auto records = parse_csv(text);
    REQUIRE(!records.empty());
    CsvTable t;
    t.header = records.front();
    t.rows.assign(records.begin() + 1, records.end());
    return t;
}

// Finds the named column in a parsed CSV.
size_t col_of(const CsvTable& t, const std::string& name) {
    for (size_t i = 0; i < t.header.size(); ++i) {
        if (t.header[i] == name) return i;
    }
    FAIL("column not found: ", name);
    return 0;
}

std::string train_once(const std::string& dirname, const std::string& extra = "") {
    const std::string out = fresh_dir(dirname);
    CmdResult r = run_cli("train --out " + out + kGaussArgs +
                          "--arch mlp --hidden 8 --epochs 2 --batch 32 --steps 2 --quiet" + extra);
    REQUIRE(r.code == 0);
    return out;
}

} // namespace

TEST_CASE("cli: train writes checkpoint, metrics, and resolved config") {
    const std::string out = train_once("cli-train");
    CHECK(std::filesystem::exists(out + "/checkpoint.bin"));
    CHECK(std::filesystem::exists(out + "/metrics.csv"));
    CHECK(std::filesystem::exists(out + "/resolved.cfg"));

    CsvTable metrics = table_of(read_file(out + "/metrics.csv"));
    CHECK(metrics.rows.size() == 2);
    CHECK(col_of(metrics, "val_acc") > 0);
    CHECK(metrics.header[0] == "epoch");

    // The resolved config is itself loadable and pins every effective value.
    auto cfg = load_config(out + "/resolved.cfg");
    CHECK(cfg.at("epochs") == "2");
    CHECK(cfg.at("dataset") == "synth-gaussians");
    CHECK(cfg.at("neuron") == "lifb");
}

TEST_CASE("cli: eval reproduces the checkpointed validation accuracy") {
    const std::string out = train_once("cli-eval-train");
    CsvTable metrics = table_of(read_file(out + "/metrics.csv"));
    const size_t acc_col = col_of(metrics, "val_acc");
    double best = -1;
    for (const auto& row : metrics.rows) best = std::max(best, std::stod(row[acc_col]));

    const std::string eout = fresh_dir("cli-eval");
    CmdResult r = run_cli("eval --checkpoint " + out + "/checkpoint.bin --out " + eout +
                          kGaussArgs + "--split test --steps 2");
    CHECK(r.code == 0);
    CsvTable ev = table_of(read_file(eout + "/eval.csv"));
    REQUIRE(ev.rows.size() == 1);
    CHECK(std::stod(ev.rows[0][col_of(ev, "accuracy")]) == best);
    // Firing columns are present for both spiking layers.
    CHECK(col_of(ev, "neuron1.rest") > 0);
    CHECK(col_of(ev, "neuron3.burst") > 0);
}

TEST_CASE("cli: config file values apply and flags override them") {
    const std::string cfg_path = temp_dir() + "/cli-train.cfg";
    atomic_write_file(cfg_path,
                      "epochs=3\nsynth-n=64\nsynth-d=8\ndataset=synth-gaussians\nhidden=8\n"
                      "batch=32\nquiet=true\n");
    const std::string out1 = fresh_dir("cli-cfg1");
    CmdResult r1 = run_cli("train --out " + out1 + " --config " + cfg_path);
    REQUIRE(r1.code == 0);
    CHECK(load_config(out1 + "/resolved.cfg").at("epochs") == "3");
    CHECK(table_of(read_file(out1 + "/metrics.csv")).rows.size() == 3);

    const std::string out2 = fresh_dir("cli-cfg2");
    CmdResult r2 = run_cli("train --out " + out2 + " --config " + cfg_path + " --epochs 1");
    REQUIRE(r2.code == 0);
    CHECK(load_config(out2 + "/resolved.cfg").at("epochs") == "1");
    CHECK(table_of(read_file(out2 + "/metrics.csv")).rows.size() == 1);
}

TEST_CASE("cli: capacity emits the golden binary counts and an svg chart") {
    const std::string out = fresh_dir("cli-capacity");
    CmdResult r = run_cli("capacity --out " + out + " --tmax 2 --n 2,3 --kappa 1.5");
    REQUIRE(r.code == 0);
    CsvTable csv = table_of(read_file(out + "/capacity.csv"));
    REQUIRE(csv.rows.size() == 4);
    const size_t tcol = col_of(csv, "t"), ncol = col_of(csv, "n"),
                 ccol = col_of(csv, "exact_count"), scol = col_of(csv, "satisfied");
    for (const auto& row : csv.rows) {
        CHECK(row[scol] == "true");
        if (row[ncol] == "2" && row[tcol] == "1") CHECK(row[ccol] == "4");
        if (row[ncol] == "2" && row[tcol] == "2") CHECK(row[ccol] == "14");
        if (row[ncol] == "3" && row[tcol] == "2") CHECK(row[ccol] == "60");
    }
    const std::string svg = read_file(out + "/capacity.svg");
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("</svg>") != std::string::npos);

    // Over-budget requests explain the escape hatch and fail with a runtime code.
    CmdResult big = run_cli("capacity --out " + fresh_dir("cli-capacity-big") +
                            " --tmax 3 --n 3 --kappa 1.5 --allow-large");
    CHECK(big.code == 0); // over-budget cells are skipped, bounds still emitted
}

TEST_CASE("cli: capacity reads kappa from a trained checkpoint") {
    const std::string out = train_once("cli-cap-train", " --kappa-init 1.5");
    const std::string cout_dir = fresh_dir("cli-cap-from");
    CmdResult r = run_cli("capacity --out " + cout_dir + " --tmax 2 --n 3 --from-checkpoint " +
                          out + "/checkpoint.bin");
    REQUIRE(r.code == 0);
    CHECK(r.out.find("kappa from checkpoint:") != std::string::npos);
    CsvTable csv = table_of(read_file(cout_dir + "/capacity.csv"));
    CHECK(csv.rows.size() == 2);
}

TEST_CASE("cli: simulate writes a trace and reports the burst signature") {
    const std::string out = fresh_dir("cli-sim");
    CmdResult r = run_cli("simulate --out " + out + " --steps 20000 --dt 0.01 --current 0.6");
    REQUIRE(r.code == 0);
    CHECK(r.out.find("initial ISI mean") != std::string::npos);
    CsvTable tr = table_of(read_file(out + "/trace.csv"));
    CHECK(tr.rows.size() == 20000);
    CHECK(tr.header == std::vector<std::string>{"step", "time", "I", "v", "h", "spike"});
    CHECK(read_file(out + "/trace.svg").find("polyline") != std::string::npos);

    // Zero input current: no spikes, flat trace.
    const std::string qout = fresh_dir("cli-sim-quiet");
    CmdResult q = run_cli("simulate --out " + qout + " --steps 500 --current 0");
    REQUIRE(q.code == 0);
    CsvTable qt = table_of(read_file(qout + "/trace.csv"));
    const size_t vcol = col_of(qt, "v"), spkcol = col_of(qt, "spike");
    for (const auto& row : qt.rows) {
        CHECK(row[vcol] == "0");
        CHECK(row[spkcol] == "0");
    }

    // Divergent step size is a runtime error with advice on stderr.
    CmdResult bad = run_cli("simulate --out " + fresh_dir("cli-sim-bad") +
                            " --steps 10 --dt 2000 --current 0.6");
    CHECK(bad.code == 2);
    CHECK(bad.err.find("reduce dt") != std::string::npos);
}

TEST_CASE("cli: decouple then verify passes bit-exactly") {
    const std::string out = train_once("cli-dec-train", " --kappa-init 1.5");
    const std::string dout = fresh_dir("cli-dec");
    CmdResult d = run_cli("decouple --checkpoint " + out + "/checkpoint.bin --out " + dout);
    REQUIRE(d.code == 0);
    CHECK(std::filesystem::exists(dout + "/checkpoint.bin"));

    const std::string vout = fresh_dir("cli-verify");
    CmdResult v = run_cli("verify --checkpoint " + out + "/checkpoint.bin --out " + vout +
                          " --inputs 16 --steps-list 1,2,4,6");
    CHECK(v.code == 0);
    CHECK(v.out.find("PASS") != std::string::npos);
    CHECK(v.out.find("max logits deviation = 0") != std::string::npos);
    CHECK(read_file(vout + "/verify.txt").find("PASS") != std::string::npos);

    // The decoupled checkpoint itself restores and evaluates.
    const std::string eout = fresh_dir("cli-dec-eval");
    CmdResult e = run_cli("eval --checkpoint " + dout + "/checkpoint.bin --out " + eout +
                          kGaussArgs + "--steps 2");
    CHECK(e.code == 0);
}

TEST_CASE("cli: verify flags a kappa outside the exact-recovery range") {
    // kappa = 0.1 cannot be rebuilt as 1 + (kappa - 1) in 64-bit; with low
    // thresholds the burst branch fires often, so the deviation must surface.
    NetSpec spec;
    spec.arch = "mlp";
    spec.input_shape = {1, 1, 8};
    spec.classes = 2;
    spec.hidden = 8;
    spec.model = NeuronModel::Lifb;
    spec.kappa_init = 0.1;
    spec.params.v_th = 0.05;
    spec.params.v_h = 0.1;
    Rng r(1);
    Network net = build_network(spec, r);
    Checkpoint ck = make_checkpoint(net, nullptr, nullptr, 0, 0, "");
    const std::string path = temp_dir() + "/cli-tampered.bin";
    save_checkpoint(ck, path);

    const std::string vout = fresh_dir("cli-verify-fail");
    CmdResult v = run_cli("verify --checkpoint " + path + " --out " + vout + " --inputs 32");
    CHECK(v.code == 2);
    CHECK(v.out.find("FAIL") != std::string::npos);
    CHECK(v.err.find("deviate") != std::string::npos); // decouple warning on stderr
}

TEST_CASE("cli: raster emits per-layer rows with a seeded neuron selection") {
    const std::string out = train_once("cli-raster-train");
    const std::string r1 = fresh_dir("cli-raster1");
    CmdResult a = run_cli("raster --checkpoint " + out + "/checkpoint.bin --out " + r1 +
                          kGaussArgs + "--samples 2 --neurons 5 --steps 4 --seed 11");
    REQUIRE(a.code == 0);
    CHECK(std::filesystem::exists(r1 + "/raster-0.csv"));
    CHECK(std::filesystem::exists(r1 + "/raster-1.csv"));
    CHECK(std::filesystem::exists(r1 + "/raster-1.svg"));
    CsvTable csv = table_of(read_file(r1 + "/raster-0.csv"));
    CHECK(csv.rows.size() == 10); // 2 spiking layers x 5 sampled neurons
    CHECK(csv.header.size() == 3 + 4);
    for (const auto& row : csv.rows) {
        for (size_t t = 3; t < row.size(); ++t) {
            const int code = std::stoi(row[t]);
            CHECK(code >= 0);
            CHECK(code <= 3);
        }
    }

    // Same seed, same selection: byte-identical CSV on a rerun.
    const std::string r2 = fresh_dir("cli-raster2");
    CmdResult b = run_cli("raster --checkpoint " + out + "/checkpoint.bin --out " + r2 +
                          kGaussArgs + "--samples 2 --neurons 5 --steps 4 --seed 11");
    REQUIRE(b.code == 0);
    CHECK(read_file(r1 + "/raster-0.csv") == read_file(r2 + "/raster-0.csv"));

    CmdResult bad = run_cli("raster --checkpoint " + out + "/checkpoint.bin --out " +
                            fresh_dir("cli-raster3") + kGaussArgs +
                            "--samples 2 --neurons 5 --layers 7");
    CHECK(bad.code == 2);
    CHECK(bad.err.find("out of range") != std::string::npos);
}

TEST_CASE("cli: ablate over a reduced grid") {
    const std::string out = fresh_dir("cli-ablate");
    CmdResult r = run_cli("ablate --out " + out + kGaussArgs +
                          "--arch mlp --hidden 8 --variants lif,lifb --steps-list 1,2 "
                          "--seeds 1 --epochs 1 --batch 32 --quiet");
    REQUIRE(r.code == 0);
    CsvTable runs = table_of(read_file(out + "/runs.csv"));
    CHECK(runs.rows.size() == 4); // 2 variants x 2 Ts x 1 seed
    CsvTable summary = table_of(read_file(out + "/summary.csv"));
    REQUIRE(summary.rows.size() == 2);
    CHECK(summary.header[0] == "variant");
    // Cells are formatted as percent +- std.
    CHECK(summary.rows[0][1].find("+-") != std::string::npos);

    CmdResult bad = run_cli("ablate --out " + fresh_dir("cli-ablate-bad") + kGaussArgs +
                            "--variants warp --epochs 1");
    CHECK(bad.code == 2);
    CHECK(bad.err.find("unknown variant") != std::string::npos);
}

TEST_CASE("cli: exit codes distinguish usage from runtime failures") {
    CHECK(run_cli("--help").code == 0);
    CHECK(run_cli("train --help").code == 0);
    CHECK(run_cli("").code == 1);                       // missing subcommand
    CHECK(run_cli("transmogrify").code == 1);           // unknown subcommand
    CHECK(run_cli("eval").code == 1);                   // missing required option
    CHECK(run_cli("train --epochs notanumber").code == 1);
    CmdResult missing = run_cli("eval --checkpoint /nonexistent.bin" + kGaussArgs);
    CHECK(missing.code == 2);
    CHECK(missing.err.find("error:") != std::string::npos);
}
