#include "cli.hpp"

#include "a2gnn/checkpoint.hpp"
#include "a2gnn/config.hpp"
#include "a2gnn/dataio.hpp"
#include "a2gnn/training.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>

namespace a2gnn::cli {

namespace fs = std::filesystem;

namespace {

struct Options {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::size_t repeats = 1;
    std::string out_dir = ".";
    std::vector<std::string> overrides;
    std::string checkpoint;
    std::string split = "test";
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fixed(double v, int digits) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string fixed4(double v) { return fixed(v, 4); }

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    return out;
}

KeyValues gather(const Options& opt) {
    KeyValues kv;
    if (!opt.config_path.empty()) {
        kv = read_key_values(opt.config_path);
    }
    for (const auto& o : opt.overrides) {
        apply_override(kv, o);
    }
    if (opt.seed) {
        kv["seed"] = std::to_string(*opt.seed);
    }
    return kv;
}

RunConfig run_config(const Options& opt) { return RunConfig::from_key_values(gather(opt)); }

// Checkpointed state, with data-location keys optionally redirected.
ModelState checkpoint_state(const Options& opt) {
    if (opt.checkpoint.empty()) {
        throw ConfigError("--checkpoint is required");
    }
    ModelState state = load_checkpoint(opt.checkpoint);
    static const std::vector<std::string> data_keys{"series_path", "adjacency_path", "series_layout",
                                                    "expected_nodes"};
    const KeyValues trained = state.config.to_key_values();
    KeyValues kv = trained;
    for (const auto& [k, v] : gather(opt)) kv[k] = v;
    const RunConfig merged = RunConfig::from_key_values(kv);
    // compare parsed values so "0.2" and "0.20" count as the same setting
    for (const auto& [k, v] : merged.to_key_values()) {
        if (std::find(data_keys.begin(), data_keys.end(), k) == data_keys.end() && trained.at(k) != v) {
            throw ConfigError("'" + k + "' cannot be changed for a trained checkpoint; only data paths may be overridden");
        }
    }
    state.config = merged;
    return state;
}

Split parse_split(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "valid") return Split::valid;
    if (s == "test") return Split::test;
    throw ConfigError("unknown split '" + s + "' (expected train, valid or test)");
}

void write_metric_rows(std::ostream& os, const std::string& variant, std::size_t epoch, const char* split,
                       const MetricReport& r, double train_loss, std::size_t t_out) {
    const auto row = [&](const std::string& horizon, const Metrics& m) {
        os << variant << ',' << epoch << ',' << split << ',' << horizon << ',' << num(m.rse) << ','
           << num(m.corr) << ',' << num(m.mae) << ',' << num(m.rmse) << ',' << num(m.mape) << ','
           << num(train_loss) << '\n';
    };
    for (std::size_t h : reporting_horizons(t_out)) {
        row(std::to_string(h), r.per_horizon[h - 1]);
    }
    row("all", r.overall);
}

void print_report(std::ostream& out, const std::string& title, const MetricReport& r, std::size_t t_out) {
    out << title << '\n';
    // RSE/CORR to 3 places, MAE/RMSE/MAPE to 2, as benchmark tables are usually printed
    out << "horizon  RSE    CORR   MAE     RMSE    MAPE\n";
    const auto cell = [](std::string s, std::size_t w) {
        s.resize(std::max(w, s.size() + 1), ' ');
        return s;
    };
    const auto row = [&](const std::string& label, const Metrics& m) {
        out << cell(label, 9) << cell(fixed(m.rse, 3), 7) << cell(fixed(m.corr, 3), 7) << cell(fixed(m.mae, 2), 8)
            << cell(fixed(m.rmse, 2), 8) << fixed(m.mape, 2) << "%\n";
    };
    for (std::size_t h : reporting_horizons(t_out)) {
        row(std::to_string(h), r.per_horizon[h - 1]);
    }
    row("overall", r.overall);
}

int cmd_train(const Options& opt, std::ostream& out) {
    const RunConfig base = run_config(opt);
    if (opt.repeats == 0) {
        throw ConfigError("--repeats must be at least 1");
    }
    const TrainingData data = load_training_data(base);
    std::vector<Metrics> finals;
    bool diverged = false;
    for (std::size_t rep = 0; rep < opt.repeats; ++rep) {
        RunConfig cfg = base;
        cfg.seed = base.seed + rep;
        fs::path dir = opt.out_dir;
        if (opt.repeats > 1) {
            dir /= "repeat_" + std::to_string(rep);
        }
        fs::create_directories(dir);
        const std::string variant = cfg.variant_label();

        std::ofstream csv = open_out(dir / "metrics.csv");
        csv << artifact_header(cfg.hash(), cfg.seed, "metrics") << '\n';
        csv << "variant,epoch,split,horizon,rse,corr,mae,rmse,mape,train_loss\n";
        const TrainResult result = train(cfg, data, [&](const EpochRecord& rec, const ModelState&) {
            write_metric_rows(csv, variant, rec.epoch, "valid", rec.valid, rec.train_loss, cfg.t_out);
            out << "epoch " << rec.epoch << "  train_loss " << fixed4(rec.train_loss) << "  valid_rmse "
                << fixed4(rec.valid.overall.rmse) << '\n';
        });
        write_metric_rows(csv, variant, result.best_epoch, "test", result.test, 0.0, cfg.t_out);
        if (!csv) {
            throw IoError("failed writing " + (dir / "metrics.csv").string());
        }
        save_checkpoint((dir / "checkpoint.txt").string(), result.best);
        print_report(out, variant + "  seed " + std::to_string(cfg.seed) + "  best epoch " +
                              std::to_string(result.best_epoch) + "  test",
                     result.test, cfg.t_out);
        finals.push_back(result.test.overall);
        if (result.diverged) {
            diverged = true;
            out << "diverged: " << result.diagnostic << '\n';
        }
    }
    if (finals.size() > 1) {
        const auto stat = [&](double Metrics::*field) {
            double mean = 0.0;
            for (const auto& m : finals) mean += m.*field;
            mean /= static_cast<double>(finals.size());
            double var = 0.0;
            for (const auto& m : finals) var += (m.*field - mean) * (m.*field - mean);
            var /= static_cast<double>(finals.size() - 1);
            return fixed4(mean) + " ± " + fixed4(std::sqrt(var));
        };
        out << "over " << finals.size() << " runs (test, overall)\n";
        out << "RSE " << stat(&Metrics::rse) << "\nCORR " << stat(&Metrics::corr) << "\nMAE "
            << stat(&Metrics::mae) << "\nRMSE " << stat(&Metrics::rmse) << "\nMAPE " << stat(&Metrics::mape)
            << '\n';
    }
    if (diverged) {
        throw NumericError("training diverged; best checkpoint kept");
    }
    return ok;
}

int cmd_evaluate(const Options& opt, std::ostream& out) {
    const ModelState state = checkpoint_state(opt);
    const Split split = parse_split(opt.split);
    const TrainingData data = load_training_data(state.config);
    const MetricReport r = evaluate(state, data.dataset, split);
    print_report(out, state.config.variant_label() + "  " + split_name(split), r, state.config.t_out);
    return ok;
}

int cmd_forecast(const Options& opt, std::ostream& out) {
    const ModelState state = checkpoint_state(opt);
    const TrainingData data = load_training_data(state.config);
    const SeriesDataset& ds = data.dataset;
    WindowSet w;
    w.count = 1;
    w.t_in = ds.t_in;
    w.t_out = ds.t_out;
    w.nodes = ds.nodes;
    w.first_row = ds.steps - ds.t_in;
    for (std::size_t t = w.first_row; t < ds.steps; ++t) {
        for (std::size_t n = 0; n < ds.nodes; ++n) {
            w.x.push_back(ds.norm_at(t, n));
        }
    }
    w.y.assign(w.t_out * w.nodes, 0.0);
    w.y_raw = w.y;
    const Predictions p = predict(state, w);
    fs::create_directories(opt.out_dir);
    const fs::path path = fs::path(opt.out_dir) / "forecast.csv";
    std::ofstream csv = open_out(path);
    csv << artifact_header(state.config.hash(), state.config.seed, "forecast") << '\n';
    csv << "step";
    for (std::size_t n = 0; n < ds.nodes; ++n) csv << ",node" << n;
    csv << '\n';
    for (std::size_t h = 0; h < w.t_out; ++h) {
        csv << (ds.steps + h);
        for (std::size_t n = 0; n < ds.nodes; ++n) csv << ',' << num(p.denormalized[h * ds.nodes + n]);
        csv << '\n';
    }
    out << "wrote " << path.string() << '\n';
    return ok;
}

int cmd_gen_synthetic(const Options& opt, std::ostream& out) {
    KeyValues kv;
    for (const auto& o : opt.overrides) apply_override(kv, o);
    if (opt.seed) kv["seed"] = std::to_string(*opt.seed);
    const SyntheticSpec spec = SyntheticSpec::from_key_values(kv);
    const SyntheticData syn = gen_synthetic(spec);
    fs::create_directories(opt.out_dir);
    const std::string header = artifact_header(fnv1a64(spec.canonical()), spec.seed, "synthetic");
    const fs::path series = fs::path(opt.out_dir) / "series.csv";
    write_series_csv(series, syn.dataset, header);
    const fs::path graph = fs::path(opt.out_dir) / "true_graph.csv";
    std::ofstream g = open_out(graph);
    g << header << '\n';
    for (std::size_t i = 0; i < spec.n; ++i) {
        for (std::size_t j = 0; j < spec.n; ++j) {
            g << (j ? "," : "") << int(syn.true_graph[i * spec.n + j]);
        }
        g << '\n';
    }
    out << "wrote " << series.string() << " and " << graph.string() << '\n';
    return ok;
}

void write_matrix(std::ostream& os, const Tensor& m) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            os << (j ? "," : "") << num(m.at(i, j));
        }
        os << '\n';
    }
}

int cmd_export_graph(const Options& opt, std::ostream& out) {
    const ModelState state = checkpoint_state(opt);
    if (!state.config.use_agl) {
        throw ConfigError("export-graph: the checkpoint was trained with use_agl=false");
    }
    fs::create_directories(opt.out_dir);
    const std::string header = artifact_header(state.config.hash(), state.config.seed, "graph");
    const fs::path logits = fs::path(opt.out_dir) / "graph_logits.csv";
    const fs::path topc = fs::path(opt.out_dir) / "graph_topc.csv";
    std::ofstream a = open_out(logits);
    a << header << '\n';
    write_matrix(a, state.model.graph().logits);
    std::ofstream b = open_out(topc);
    b << header << '\n';
    write_matrix(b, topc_inference(state.model.graph()).weights);
    out << "wrote " << logits.string() << " and " << topc.string() << '\n';
    return ok;
}

int cmd_export_attention(const Options& opt, std::ostream& out) {
    const ModelState state = checkpoint_state(opt);
    if (!state.config.use_arl) {
        throw ConfigError("export-attention: the checkpoint was trained with use_arl=false");
    }
    const TrainingData data = load_training_data(state.config);
    const WindowSet w = make_windows(data.dataset, parse_split(opt.split));
    const Predictions p = predict(state, w);
    fs::create_directories(opt.out_dir);
    const fs::path path = fs::path(opt.out_dir) / "attention.csv";
    std::ofstream csv = open_out(path);
    csv << artifact_header(state.config.hash(), state.config.seed, "attention") << '\n';
    csv << "node";
    for (const auto& name : state.model.channel_names()) csv << ',' << name;
    csv << '\n';
    for (std::size_t i = 0; i < p.mean_attention.rows(); ++i) {
        csv << i;
        for (std::size_t k = 0; k < p.mean_attention.cols(); ++k) csv << ',' << num(p.mean_attention.at(i, k));
        csv << '\n';
    }
    out << "wrote " << path.string() << '\n';
    return ok;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"a2gnn: graph-learning forecaster"};
    app.require_subcommand(1);
    Options opt;

    const auto common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config_path, "key=value config file")->check(CLI::ExistingFile);
        sub->add_option("--seed", opt.seed, "master seed");
        sub->add_option("--out-dir", opt.out_dir, "directory for written artifacts");
        sub->add_option("--set", opt.overrides, "key=value override (repeatable)");
    };
    const auto with_checkpoint = [&](CLI::App* sub) {
        common(sub);
        sub->add_option("--checkpoint", opt.checkpoint, "checkpoint written by train")->required();
    };

    auto* train_cmd = app.add_subcommand("train", "train a model, write checkpoint.txt and metrics.csv");
    common(train_cmd);
    train_cmd->add_option("--repeats", opt.repeats, "independent runs with seeds seed..seed+R-1");
    auto* eval_cmd = app.add_subcommand("evaluate", "print per-horizon metrics for a checkpoint");
    with_checkpoint(eval_cmd);
    eval_cmd->add_option("--split", opt.split, "train, valid or test");
    auto* fc_cmd = app.add_subcommand("forecast", "forecast the steps after the end of the series");
    with_checkpoint(fc_cmd);
    auto* gen_cmd = app.add_subcommand("gen-synthetic", "write a synthetic series with a known graph");
    common(gen_cmd);
    auto* graph_cmd = app.add_subcommand("export-graph", "write learned logits and the top-C adjacency");
    with_checkpoint(graph_cmd);
    auto* attn_cmd = app.add_subcommand("export-attention", "write per-node mean attention weights");
    with_checkpoint(attn_cmd);
    attn_cmd->add_option("--split", opt.split, "train, valid or test");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? ok : usage;
    }

    try {
        if (*train_cmd) return cmd_train(opt, out);
        if (*eval_cmd) return cmd_evaluate(opt, out);
        if (*fc_cmd) return cmd_forecast(opt, out);
        if (*gen_cmd) return cmd_gen_synthetic(opt, out);
        if (*graph_cmd) return cmd_export_graph(opt, out);
        if (*attn_cmd) return cmd_export_attention(opt, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return config_error;
    } catch (const CheckpointError& e) {
        err << "checkpoint error: " << e.what() << '\n';
        return io_error;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << '\n';
        return data_error;
    } catch (const NumericError& e) {
        err << "numeric error: " << e.what() << '\n';
        return numeric_error;
    } catch (const IoError& e) {
        err << "io error: " << e.what() << '\n';
        return io_error;
    } catch (const fs::filesystem_error& e) {
        err << "io error: " << e.what() << '\n';
        return io_error;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return config_error;
    }
    return usage;
}

}  // namespace a2gnn::cli
