#include "bilayer/config.hpp"

#include <charconv>
#include <climits>
#include <cstdio>
#include <cstdlib>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <variant>

#include "bilayer/ed.hpp"

namespace bilayer {

Mode parse_mode(std::string_view s) {
    if (s == "observables") return Mode::observables;
    if (s == "replica-eh") return Mode::replica_eh;
    if (s == "ed") return Mode::ed;
    if (s == "analyze") return Mode::analyze;
    throw ConfigError("unknown mode '" + std::string(s) + "'");
}

std::string to_string(Mode m) {
    switch (m) {
    case Mode::observables: return "observables";
    case Mode::replica_eh: return "replica-eh";
    case Mode::ed: return "ed";
    case Mode::analyze: return "analyze";
    }
    return "?";
}

namespace {

struct Value;
using Array = std::vector<Value>;

struct Value {
    std::variant<std::int64_t, double, bool, std::string, Array> v;
    int line = 0;
};

struct Entry {
    Value value;
    bool used = false;
};

[[noreturn]] void fail(int line, const std::string& msg) {
    throw ConfigError("line " + std::to_string(line) + ": " + msg);
}

std::string_view trim(std::string_view s) {
    const char* ws = " \t\r";
    auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

class ValueParser {
public:
    ValueParser(std::string_view text, int line) : s_(text), line_(line) {}

    Value parse() {
        Value v = value(true);
        skip();
        if (pos_ != s_.size()) fail(line_, "unexpected trailing characters '" + std::string(s_.substr(pos_)) + "'");
        return v;
    }

private:
    void skip() {
        while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
    }

    Value value(bool allow_array) {
        skip();
        if (pos_ >= s_.size()) fail(line_, "missing value");
        char c = s_[pos_];
        if (c == '"') {
            auto end = s_.find('"', pos_ + 1);
            if (end == std::string_view::npos) fail(line_, "unterminated string");
            Value v{std::string(s_.substr(pos_ + 1, end - pos_ - 1)), line_};
            pos_ = end + 1;
            return v;
        }
        if (c == '[') {
            if (!allow_array) fail(line_, "nested arrays are not supported");
            ++pos_;
            Array items;
            skip();
            if (pos_ < s_.size() && s_[pos_] == ']') {
                ++pos_;
                return {items, line_};
            }
            for (;;) {
                items.push_back(value(false));
                skip();
                if (pos_ >= s_.size()) fail(line_, "unterminated array");
                if (s_[pos_] == ']') {
                    ++pos_;
                    return {items, line_};
                }
                if (s_[pos_] != ',') fail(line_, "expected ',' or ']' in array");
                ++pos_;
            }
        }
        auto end = s_.find_first_of(",] \t", pos_);
        if (end == std::string_view::npos) end = s_.size();
        std::string_view tok = s_.substr(pos_, end - pos_);
        pos_ = end;
        if (tok == "true") return {true, line_};
        if (tok == "false") return {false, line_};
        bool real = tok.find_first_of(".eE") != std::string_view::npos || tok == "inf" || tok == "nan";
        if (!real) {
            std::int64_t i = 0;
            auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), i);
            if (ec == std::errc() && p == tok.data() + tok.size()) return {i, line_};
        } else {
            double d = 0.0;
            auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), d);
            if (ec == std::errc() && p == tok.data() + tok.size()) return {d, line_};
        }
        fail(line_, "cannot parse value '" + std::string(tok) + "'");
    }

    std::string_view s_;
    int line_;
    std::size_t pos_ = 0;
};

// Strips a comment that is not inside a string.
std::string_view strip_comment(std::string_view line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') in_string = !in_string;
        if (line[i] == '#' && !in_string) return line.substr(0, i);
    }
    return line;
}

class Document {
public:
    explicit Document(std::string_view text) {
        std::string section;
        int lineno = 0;
        std::size_t start = 0;
        while (start <= text.size()) {
            auto nl = text.find('\n', start);
            if (nl == std::string_view::npos) nl = text.size();
            ++lineno;
            std::string_view line = trim(strip_comment(text.substr(start, nl - start)));
            start = nl + 1;
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']') fail(lineno, "malformed section header");
                section = std::string(trim(line.substr(1, line.size() - 2)));
                if (section.empty()) fail(lineno, "empty section name");
                if (!sections_.insert(section).second) fail(lineno, "duplicate section [" + section + "]");
                continue;
            }
            auto eq = line.find('=');
            if (eq == std::string_view::npos) fail(lineno, "expected 'key = value'");
            std::string key(trim(line.substr(0, eq)));
            if (key.empty()) fail(lineno, "missing key");
            std::string full = section.empty() ? key : section + "." + key;
            Value v = ValueParser(trim(line.substr(eq + 1)), lineno).parse();
            if (!entries_.emplace(full, Entry{std::move(v), false}).second) fail(lineno, "duplicate key '" + full + "'");
        }
    }

    const Value* find(const std::string& key) {
        auto it = entries_.find(key);
        if (it == entries_.end()) return nullptr;
        it->second.used = true;
        return &it->second.value;
    }

    void reject_unused() const {
        for (const auto& [key, e] : entries_)
            if (!e.used) fail(e.value.line, "unknown key '" + key + "'");
    }

private:
    std::map<std::string, Entry> entries_;
    std::set<std::string> sections_;
};

std::int64_t as_int(const Value& v, const std::string& key) {
    if (auto* i = std::get_if<std::int64_t>(&v.v)) return *i;
    fail(v.line, "'" + key + "' must be an integer");
}

double as_real(const Value& v, const std::string& key) {
    if (auto* i = std::get_if<std::int64_t>(&v.v)) return static_cast<double>(*i);
    if (auto* d = std::get_if<double>(&v.v)) return *d;
    fail(v.line, "'" + key + "' must be a number");
}

bool as_bool(const Value& v, const std::string& key) {
    if (auto* b = std::get_if<bool>(&v.v)) return *b;
    fail(v.line, "'" + key + "' must be true or false");
}

std::string as_string(const Value& v, const std::string& key) {
    if (auto* s = std::get_if<std::string>(&v.v)) return *s;
    fail(v.line, "'" + key + "' must be a string");
}

// A scalar or an array of scalars.
template <class F>
auto as_list(const Value& v, const std::string& key, F scalar) {
    using T = decltype(scalar(v, key));
    std::vector<T> out;
    if (auto* a = std::get_if<Array>(&v.v)) {
        if (a->empty()) fail(v.line, "'" + key + "' must not be empty");
        for (const auto& item : *a) out.push_back(scalar(item, key));
    } else {
        out.push_back(scalar(v, key));
    }
    return out;
}

int as_int32(const Value& v, const std::string& key) {
    std::int64_t i = as_int(v, key);
    if (i < -2147483647 || i > 2147483647) fail(v.line, "'" + key + "' out of range");
    return static_cast<int>(i);
}

}  // namespace

std::vector<double> coupling_grid(double first, double last, double step) {
    if (!(step > 0.0) || !(last >= first)) throw ConfigError("g_range needs first <= last and step > 0");
    const auto n = static_cast<std::int64_t>(std::floor((last - first) / step + 1e-9)) + 1;
    if (n > 100000) throw ConfigError("g_range has too many points");
    std::vector<double> g;
    for (std::int64_t i = 0; i < n; ++i) {
        double v = first + static_cast<double>(i) * step;
        // round to 12 significant digits
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.12g", v);
        g.push_back(std::strtod(buf, nullptr));
    }
    return g;
}

void validate(const RunConfig& c) {
    auto need = [](bool ok, const std::string& msg) {
        if (!ok) throw ConfigError(msg);
    };
    need(c.workers >= 1, "workers must be >= 1");
    need(c.chains >= 1, "chains must be >= 1");
    need(c.seed <= static_cast<std::uint64_t>(INT64_MAX), "seed must be below 2^63");
    need(c.output_dir.find('"') == std::string::npos && c.input.find('"') == std::string::npos,
         "paths must not contain '\"'");
    if (c.mode == Mode::analyze) {
        need(!c.input.empty(), "analyze mode requires analyze.input");
        return;
    }
    need(!c.sizes.empty(), "missing required key 'lattice.L'");
    need(!c.g_values.empty(), "missing required key 'couplings.g' (or couplings.g_range)");
    for (int L : c.sizes) {
        need(L >= 1, "lattice.L must be positive");
        need(c.boundary == Boundary::open || L >= 3, "periodic boundaries need L >= 3");
    }
    need(c.J > 0.0 && std::isfinite(c.J), "couplings.J must be positive");
    for (double g : c.g_values) need(g >= 0.0 && std::isfinite(g), "couplings.g must be >= 0");
    if (c.beta) need(*c.beta > 0.0 && std::isfinite(*c.beta), "temperature.beta must be positive");
    need(c.beta_per_L > 0.0 && std::isfinite(c.beta_per_L), "temperature.beta_per_L must be positive");
    need(c.plan.n_equil >= 0, "sweeps.equil must be >= 0");
    need(c.plan.n_bins >= 1, "sweeps.bins must be >= 1");
    need(c.plan.bin_size >= 1, "sweeps.bin_size must be >= 1");
    need(c.checkpoint_every >= 0, "sweeps.checkpoint_every must be >= 0");
    need(c.h >= 0.0 && std::isfinite(c.h), "ed.h must be >= 0");
    if (c.n_rep) need(*c.n_rep >= 2, "replica.n_rep must be >= 2");
    if (c.mode == Mode::replica_eh) need(c.n_rep.has_value(), "replica-eh mode requires replica.n_rep");
    if (c.mode != Mode::ed) need(c.h == 0.0, "ed.h is only meaningful in ed mode");
    if (c.mode == Mode::ed)
        for (int L : c.sizes) need(2 * L * L <= ed::max_spins, "ed mode is limited to " + std::to_string(ed::max_spins) + " spins");
}

RunConfig parse_config(std::string_view text) {
    Document doc(text);
    RunConfig c;
    if (auto* v = doc.find("mode")) {
        try {
            c.mode = parse_mode(as_string(*v, "mode"));
        } catch (const ConfigError& e) {
            fail(v->line, e.what());
        }
    }
    if (auto* v = doc.find("seed")) {
        std::int64_t s = as_int(*v, "seed");
        if (s < 0) fail(v->line, "seed must be >= 0");
        c.seed = static_cast<std::uint64_t>(s);
    }
    if (auto* v = doc.find("workers")) c.workers = as_int32(*v, "workers");
    if (auto* v = doc.find("chains")) c.chains = as_int32(*v, "chains");

    if (auto* v = doc.find("lattice.L")) c.sizes = as_list(*v, "lattice.L", as_int32);
    if (auto* v = doc.find("lattice.boundary")) {
        try {
            c.boundary = parse_boundary(as_string(*v, "lattice.boundary"));
        } catch (const std::invalid_argument& e) {
            fail(v->line, e.what());
        }
    }
    if (auto* v = doc.find("couplings.J")) c.J = as_real(*v, "couplings.J");
    const Value* g = doc.find("couplings.g");
    const Value* gr = doc.find("couplings.g_range");
    if (g && gr) fail(gr->line, "give either couplings.g or couplings.g_range, not both");
    if (g) c.g_values = as_list(*g, "couplings.g", as_real);
    if (gr) {
        auto r = as_list(*gr, "couplings.g_range", as_real);
        if (r.size() != 3) fail(gr->line, "couplings.g_range must be [first, last, step]");
        try {
            c.g_values = coupling_grid(r[0], r[1], r[2]);
        } catch (const ConfigError& e) {
            fail(gr->line, e.what());
        }
    }
    const Value* b = doc.find("temperature.beta");
    const Value* bl = doc.find("temperature.beta_per_L");
    if (b && bl) fail(bl->line, "give either temperature.beta or temperature.beta_per_L, not both");
    if (b) c.beta = as_real(*b, "temperature.beta");
    if (bl) c.beta_per_L = as_real(*bl, "temperature.beta_per_L");

    if (auto* v = doc.find("sweeps.equil")) c.plan.n_equil = as_int(*v, "sweeps.equil");
    if (auto* v = doc.find("sweeps.bins")) c.plan.n_bins = as_int(*v, "sweeps.bins");
    if (auto* v = doc.find("sweeps.bin_size")) c.plan.bin_size = as_int(*v, "sweeps.bin_size");
    if (auto* v = doc.find("sweeps.checkpoint_every")) c.checkpoint_every = as_int(*v, "sweeps.checkpoint_every");
    if (auto* v = doc.find("replica.n_rep")) c.n_rep = as_int32(*v, "replica.n_rep");
    if (auto* v = doc.find("ed.h")) c.h = as_real(*v, "ed.h");
    if (auto* v = doc.find("measure.correlations")) c.measure.correlations = as_bool(*v, "measure.correlations");
    if (auto* v = doc.find("measure.slice_average")) c.measure.slice_average = as_bool(*v, "measure.slice_average");
    if (auto* v = doc.find("output.dir")) c.output_dir = as_string(*v, "output.dir");
    if (auto* v = doc.find("analyze.input")) c.input = as_string(*v, "analyze.input");
    doc.reject_unused();
    validate(c);
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

namespace {

std::string real(double v) {
    std::string s = format_double(v);
    // keep reals recognizable as reals
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
}

}  // namespace

std::string serialize(const RunConfig& c) {
    std::ostringstream os;
    os << "mode = \"" << to_string(c.mode) << "\"\n";
    os << "seed = " << c.seed << "\n";
    os << "workers = " << c.workers << "\n";
    os << "chains = " << c.chains << "\n";
    if (!c.sizes.empty()) {
        os << "\n[lattice]\nL = [";
        for (std::size_t i = 0; i < c.sizes.size(); ++i) os << (i ? ", " : "") << c.sizes[i];
        os << "]\n";
    } else {
        os << "\n[lattice]\n";
    }
    os << "boundary = \"" << to_string(c.boundary) << "\"\n";
    os << "\n[couplings]\nJ = " << real(c.J) << "\n";
    if (!c.g_values.empty()) {
        os << "g = [";
        for (std::size_t i = 0; i < c.g_values.size(); ++i) os << (i ? ", " : "") << real(c.g_values[i]);
        os << "]\n";
    }
    os << "\n[temperature]\n";
    if (c.beta)
        os << "beta = " << real(*c.beta) << "\n";
    else
        os << "beta_per_L = " << real(c.beta_per_L) << "\n";
    os << "\n[sweeps]\nequil = " << c.plan.n_equil << "\nbins = " << c.plan.n_bins << "\nbin_size = " << c.plan.bin_size
       << "\ncheckpoint_every = " << c.checkpoint_every << "\n";
    if (c.n_rep) os << "\n[replica]\nn_rep = " << *c.n_rep << "\n";
    if (c.h != 0.0) os << "\n[ed]\nh = " << real(c.h) << "\n";
    os << "\n[measure]\ncorrelations = " << (c.measure.correlations ? "true" : "false")
       << "\nslice_average = " << (c.measure.slice_average ? "true" : "false") << "\n";
    os << "\n[output]\ndir = \"" << c.output_dir << "\"\n";
    if (!c.input.empty()) os << "\n[analyze]\ninput = \"" << c.input << "\"\n";
    return os.str();
}

}  // namespace bilayer
