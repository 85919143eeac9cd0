#include "lifb/train.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "lifb/io_util.hpp"
#include "lifb/ops.hpp"

namespace lifb {

static size_t argmax_row(const Tensor& logits, size_t row) {
    const size_t C = logits.dim(1);
    size_t best = 0;
    for (size_t c = 1; c < C; ++c) {
        if (logits.data()[row * C + c] > logits.data()[row * C + best]) best = c;
    }
    return best;
}

static void check_dataset(const Network& net, const LabeledDataset& ds, const std::string& what) {
    ds.validate();
    if (ds.size() == 0) throw std::invalid_argument(what + " dataset is empty");
    if (ds.classes > net.spec.classes) {
        throw std::invalid_argument(what + " dataset has " + std::to_string(ds.classes) +
                                    " classes, network emits " +
                                    std::to_string(net.spec.classes));
    }
}

EvalMetrics evaluate(Network& net, const LabeledDataset& ds, size_t T, size_t batch_size) {
    check_dataset(net, ds, "eval");
    EvalMetrics m;
    std::vector<std::string> names;
    std::vector<std::array<uint64_t, 4>> counts; // rest, regular, burst, negative per layer
    size_t correct = 0;
    double loss_sum = 0;

    const auto batches = epoch_batches(ds.size(), batch_size, 0, 0, false);
    Tensor images;
    std::vector<int> labels;
    for (const auto& idx : batches) {
        gather_batch(ds, idx, images, labels);
        SpikeRaster raster;
        PassCtx pc;
        pc.T = T;
        pc.raster = &raster;
        Tensor logits = net.forward(images, pc);
        loss_sum += cross_entropy_loss(logits, labels, nullptr) * double(idx.size());
        for (size_t i = 0; i < idx.size(); ++i) {
            if (argmax_row(logits, i) == size_t(labels[i])) ++correct;
        }
        if (names.empty()) {
            for (const auto& rl : raster.layers) {
                names.push_back(rl.name);
                counts.push_back({0, 0, 0, 0});
            }
        }
        for (size_t li = 0; li < raster.layers.size(); ++li) {
            for (uint8_t c : raster.layers[li].codes) counts[li][c < 4 ? c : 3] += 1;
        }
    }
    m.loss = loss_sum / double(ds.size());
    m.accuracy = double(correct) / double(ds.size());
    for (size_t li = 0; li < names.size(); ++li) {
        LayerFiring f;
        f.name = names[li];
        const double total =
            double(counts[li][0] + counts[li][1] + counts[li][2] + counts[li][3]);
        f.rest = double(counts[li][0]) / total;
        f.regular = double(counts[li][1]) / total;
        f.burst = double(counts[li][2]) / total;
        f.negative = double(counts[li][3]) / total;
        m.firing.push_back(f);
    }
    return m;
}

double lr_decay_scale(size_t epoch, size_t total_epochs) {
    if (4 * epoch >= 3 * total_epochs) return 0.01;
    if (2 * epoch >= total_epochs) return 0.1;
    return 1.0;
}

static void kappa_snapshot(Network& net, EpochMetrics& em) {
    for (auto& l : net.layers) {
        if (auto* nl = dynamic_cast<NeuronLayer*>(l.get())) {
            em.kappa_names.push_back(l->name);
            if (nl->model == NeuronModel::Lifb) {
                double s = 0;
                for (size_t i = 0; i < nl->kappa.value.size(); ++i) {
                    s += double(nl->kappa.value.data()[i]);
                }
                em.kappa_mean.push_back(s / double(nl->kappa.value.size()));
            } else {
                em.kappa_mean.push_back(std::numeric_limits<double>::quiet_NaN());
            }
        } else if (auto* pl = dynamic_cast<PairLayer*>(l.get())) {
            em.kappa_names.push_back(l->name);
            double s = 0;
            for (size_t i = 0; i < pl->wb.value.size(); ++i) {
                s += 1.0 + double(pl->wb.value.data()[i]);
            }
            em.kappa_mean.push_back(s / double(pl->wb.value.size()));
        }
    }
}

TrainResult train(Network& net, const LabeledDataset& train_ds, const LabeledDataset& val_ds,
                  const TrainConfig& cfg) {
    check_dataset(net, train_ds, "train");
    check_dataset(net, val_ds, "val");
    if (cfg.epochs == 0) throw std::invalid_argument("train: epochs must be >= 1");
    if (cfg.T == 0) throw std::invalid_argument("train: T must be >= 1");

    Optimizer opt(net, cfg.optim);
    Rng rng(cfg.seed);
    TrainResult res;
    res.best_val_acc = -1;
    uint64_t step = 0;

    Tensor images;
    std::vector<int> labels;
    for (size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        opt.set_lr_scale(lr_decay_scale(epoch, cfg.epochs));
        double loss_sum = 0;
        size_t correct = 0;
        const auto batches =
            epoch_batches(train_ds.size(), cfg.batch_size, cfg.seed, epoch, cfg.shuffle);
        for (const auto& idx : batches) {
            gather_batch(train_ds, idx, images, labels);
            PassCtx pc;
            pc.T = cfg.T;
            pc.training = true;
            pc.retain = true;
            Tensor logits = net.forward(images, pc);
            Tensor grad_logits;
            const double loss = cross_entropy_loss(logits, labels, &grad_logits);
            if (!std::isfinite(loss)) {
                throw std::runtime_error("training aborted: non-finite loss at epoch " +
                                         std::to_string(epoch) + " step " + std::to_string(step));
            }
            loss_sum += loss * double(idx.size());
            for (size_t i = 0; i < idx.size(); ++i) {
                if (argmax_row(logits, i) == size_t(labels[i])) ++correct;
            }
            net.zero_grads();
            net.backward(grad_logits, pc);
            opt.step();
            ++step;
        }

        EpochMetrics em;
        em.epoch = epoch;
        em.lr_scale = opt.lr_scale();
        em.train_loss = loss_sum / double(train_ds.size());
        em.train_acc = double(correct) / double(train_ds.size());
        EvalMetrics vm = evaluate(net, val_ds, cfg.T);
        em.val_loss = vm.loss;
        em.val_acc = vm.accuracy;
        em.firing = vm.firing;
        kappa_snapshot(net, em);
        res.history.push_back(em);

        if (em.val_acc > res.best_val_acc) {
            res.best_val_acc = em.val_acc;
            res.best_epoch = epoch;
            if (!cfg.checkpoint_path.empty()) {
                Checkpoint ck = make_checkpoint(net, &opt, &rng, epoch, step,
                                                metrics_to_csv(res.history));
                save_checkpoint(ck, cfg.checkpoint_path);
            }
        }
        if (cfg.verbose) {
            std::printf("epoch %zu/%zu  train loss %.4f acc %.4f  val loss %.4f acc %.4f\n",
                        epoch + 1, cfg.epochs, em.train_loss, em.train_acc, em.val_loss,
                        em.val_acc);
            std::fflush(stdout);
        }
    }
    return res;
}

std::string metrics_to_csv(const std::vector<EpochMetrics>& history) {
    CsvTable t;
    t.header = {"epoch", "lr_scale", "train_loss", "train_acc", "val_loss", "val_acc"};
    if (!history.empty()) {
        for (const auto& f : history.front().firing) {
            t.header.push_back(f.name + ".rest");
            t.header.push_back(f.name + ".regular");
            t.header.push_back(f.name + ".burst");
            t.header.push_back(f.name + ".negative");
        }
        for (const auto& n : history.front().kappa_names) t.header.push_back(n + ".kappa_mean");
    }
    for (const auto& em : history) {
        std::vector<std::string> row;
        row.push_back(std::to_string(em.epoch));
        row.push_back(format_real(em.lr_scale));
        row.push_back(format_real(em.train_loss));
        row.push_back(format_real(em.train_acc));
        row.push_back(format_real(em.val_loss));
        row.push_back(format_real(em.val_acc));
        for (const auto& f : em.firing) {
            row.push_back(format_real(f.rest));
            row.push_back(format_real(f.regular));
            row.push_back(format_real(f.burst));
            row.push_back(format_real(f.negative));
        }
        for (double k : em.kappa_mean) row.push_back(format_real(k));
        t.rows.push_back(std::move(row));
    }
    return t.to_string();
}

} // namespace lifb
