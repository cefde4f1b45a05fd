#include "a2gnn/checkpoint.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

namespace a2gnn {

namespace {

void put_values(std::ostringstream& os, std::span<const double> values) {
    char buf[64];
    for (double v : values) {
        std::snprintf(buf, sizeof buf, " %a", v);
        os << buf;
    }
    os << '\n';
}

struct LineReader {
    std::istringstream in;
    std::string origin;
    std::size_t line_no = 0;

    [[noreturn]] void fail(const std::string& what) const {
        throw CheckpointError(origin + ":" + std::to_string(line_no) + ": " + what);
    }

    double number(std::istringstream& ls) {
        std::string tok;
        if (!(ls >> tok)) {
            fail("missing value");
        }
        char* end = nullptr;
        errno = 0;
        const double v = std::strtod(tok.c_str(), &end);
        if (end != tok.c_str() + tok.size() || errno == ERANGE) {
            fail("bad number '" + tok + "'");
        }
        return v;
    }

    std::size_t count(std::istringstream& ls) {
        std::size_t n = 0;
        if (!(ls >> n)) {
            fail("expected a count");
        }
        return n;
    }

    std::vector<double> values(std::istringstream& ls, std::size_t n) {
        std::vector<double> out(n);
        for (double& v : out) {
            v = number(ls);
        }
        std::string extra;
        if (ls >> extra) {
            fail("trailing data '" + extra + "'");
        }
        return out;
    }
};

}  // namespace

std::string checkpoint_text(const ModelState& state) {
    std::ostringstream os;
    os << artifact_header(state.config.hash(), state.config.seed, "checkpoint") << '\n';
    for (const auto& [k, v] : state.config.to_key_values()) {
        os << "config " << k << '=' << v << '\n';
    }
    os << "nodes " << state.model.nodes() << '\n';
    os << "norm_mean " << state.norm.mean.size();
    put_values(os, state.norm.mean);
    os << "norm_std " << state.norm.std.size();
    put_values(os, state.norm.std);
    if (const auto& a = state.model.predefined_raw()) {
        os << "predefined " << a->rows() << ' ' << a->cols();
        put_values(os, a->values());
    }
    os << "adam_step " << state.adam.step << '\n';
    for (const auto& p : state.model.parameters()) {
        os << "param " << p.name << ' ' << p.value.rows() << ' ' << p.value.cols();
        put_values(os, p.value.values());
        const auto it = state.adam.moments.find(p.name);
        if (it != state.adam.moments.end()) {
            os << "adam_m " << p.name << ' ' << it->second.m.size();
            put_values(os, it->second.m);
            os << "adam_v " << p.name << ' ' << it->second.v.size();
            put_values(os, it->second.v);
        }
    }
    return os.str();
}

ModelState parse_checkpoint(const std::string& text, const std::string& origin) {
    LineReader r{std::istringstream(text), origin};
    std::string line;
    if (!std::getline(r.in, line) || line.rfind("# a2gnn checkpoint ", 0) != 0) {
        r.line_no = 1;
        r.fail("not an a2gnn checkpoint");
    }
    r.line_no = 1;
    KeyValues kv;
    std::size_t nodes = 0;
    NormStats norm;
    std::optional<Tensor> predefined;
    AdamState adam;
    struct Stored {
        std::size_t rows, cols;
        std::vector<double> values;
    };
    std::map<std::string, Stored> params;
    while (std::getline(r.in, line)) {
        ++r.line_no;
        if (line.empty()) {
            continue;
        }
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "config") {
            const std::string rest = line.substr(7);
            const auto eq = rest.find('=');
            if (eq == std::string::npos) {
                r.fail("config line without '='");
            }
            kv[rest.substr(0, eq)] = rest.substr(eq + 1);
        } else if (tag == "nodes") {
            nodes = r.count(ls);
        } else if (tag == "norm_mean") {
            norm.mean = r.values(ls, r.count(ls));
        } else if (tag == "norm_std") {
            norm.std = r.values(ls, r.count(ls));
        } else if (tag == "predefined") {
            const std::size_t rows = r.count(ls);
            const std::size_t cols = r.count(ls);
            predefined = Tensor::from(rows, cols, r.values(ls, rows * cols));
        } else if (tag == "adam_step") {
            adam.step = r.count(ls);
        } else if (tag == "param") {
            std::string name;
            ls >> name;
            const std::size_t rows = r.count(ls);
            const std::size_t cols = r.count(ls);
            params[name] = {rows, cols, r.values(ls, rows * cols)};
        } else if (tag == "adam_m" || tag == "adam_v") {
            std::string name;
            ls >> name;
            auto vals = r.values(ls, r.count(ls));
            (tag == "adam_m" ? adam.moments[name].m : adam.moments[name].v) = std::move(vals);
        } else {
            r.fail("unknown record '" + tag + "'");
        }
    }
    if (nodes == 0 || norm.mean.size() != nodes || norm.std.size() != nodes) {
        throw CheckpointError(origin + ": missing or inconsistent node statistics");
    }
    RunConfig cfg = RunConfig::from_key_values(kv);
    std::mt19937_64 scratch(0);
    ModelState state{cfg, Model(cfg, nodes, predefined, scratch), std::move(adam), std::move(norm)};
    for (const auto& p : state.model.parameters()) {
        const auto it = params.find(p.name);
        if (it == params.end()) {
            throw CheckpointError(origin + ": parameter '" + p.name + "' is missing");
        }
        if (it->second.rows != p.value.rows() || it->second.cols != p.value.cols()) {
            throw CheckpointError(origin + ": parameter '" + p.name + "' has shape [" +
                                  std::to_string(it->second.rows) + "x" + std::to_string(it->second.cols) +
                                  "], model expects " + p.value.shape().str());
        }
        Tensor t = p.value;
        auto w = t.mutable_values();
        std::copy(it->second.values.begin(), it->second.values.end(), w.begin());
        params.erase(it);
    }
    if (!params.empty()) {
        throw CheckpointError(origin + ": unexpected parameter '" + params.begin()->first + "'");
    }
    return state;
}

void save_checkpoint(const std::string& path, const ModelState& state) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw CheckpointError("cannot write checkpoint '" + path + "'");
    }
    out << checkpoint_text(state);
    if (!out) {
        throw CheckpointError("failed writing checkpoint '" + path + "'");
    }
}

ModelState load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw CheckpointError("cannot open checkpoint '" + path + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_checkpoint(ss.str(), path);
}

}  // namespace a2gnn
