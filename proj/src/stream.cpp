#include "marlene/stream.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace marlene {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string strip_quotes(const std::string& s) {
    if (s.size() >= 2 && ((s.front() == '\'' && s.back() == '\'') ||
                          (s.front() == '"' && s.back() == '"')))
        return s.substr(1, s.size() - 2);
    return s;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double(const std::string& tok, std::size_t line) {
    try {
        std::size_t pos = 0;
        double v = std::stod(tok, &pos);
        while (pos < tok.size() && std::isspace(static_cast<unsigned char>(tok[pos]))) ++pos;
        if (pos != tok.size()) throw parse_error(line, "bad numeric value '" + tok + "'");
        return v;
    } catch (const parse_error&) {
        throw;
    } catch (...) {
        throw parse_error(line, "bad numeric value '" + tok + "'");
    }
}

// MEKA puts the label count in the relation name, e.g. 'yeast: -C 14'.
int meka_label_count(const std::string& relation, std::size_t line) {
    std::istringstream is(relation);
    std::string tok;
    while (is >> tok) {
        if (tok == "-C" || tok == "-c") {
            std::string val;
            if (!(is >> val)) throw parse_error(line, "-C flag without a value in relation name");
            try {
                return std::stoi(val);
            } catch (...) {
                throw parse_error(line, "bad -C value '" + val + "' in relation name");
            }
        }
    }
    throw parse_error(line, "relation name carries no MEKA -C label count");
}

struct arff_attr {
    std::string name;
    feature_kind kind;
};

bool is_binary_nominal(const std::string& domain) {
    // accepts {0,1} / {1,0} with optional spaces and quotes
    std::string inner = trim(domain);
    if (inner.size() < 2 || inner.front() != '{' || inner.back() != '}') return false;
    auto vals = split(inner.substr(1, inner.size() - 2), ',');
    if (vals.size() != 2) return false;
    std::string a = strip_quotes(trim(vals[0]));
    std::string b = strip_quotes(trim(vals[1]));
    return (a == "0" && b == "1") || (a == "1" && b == "0");
}

} // namespace

dataset read_arff(const std::string& text, const std::string& name_hint) {
    std::istringstream in(text);
    std::string raw;
    std::size_t line_no = 0;

    std::string relation;
    std::vector<arff_attr> attrs;
    bool in_data = false;
    int c_flag = 0;
    bool have_relation = false;

    dataset ds;
    std::size_t n_labels = 0, n_features = 0;
    bool labels_first = true;
    std::vector<double> running_sum;
    std::vector<std::size_t> running_cnt;
    std::uint64_t t = 0;

    auto finish_header = [&](std::size_t at_line) {
        if (!have_relation) throw parse_error(at_line, "@data before @relation");
        if (attrs.empty()) throw parse_error(at_line, "@data before any @attribute");
        std::size_t l = static_cast<std::size_t>(std::abs(c_flag));
        if (l == 0 || l >= attrs.size())
            throw parse_error(at_line, "-C label count out of range for " +
                                           std::to_string(attrs.size()) + " attributes");
        labels_first = c_flag > 0;
        n_labels = l;
        n_features = attrs.size() - l;
        std::string rel_base = relation;
        if (auto p = rel_base.find("-C"); p != std::string::npos) rel_base = rel_base.substr(0, p);
        if (auto p = rel_base.find("-c"); p != std::string::npos) rel_base = rel_base.substr(0, p);
        while (!rel_base.empty() &&
               (rel_base.back() == ':' || rel_base.back() == ' ' || rel_base.back() == '\t'))
            rel_base.pop_back();
        ds.meta.name = name_hint.empty() ? rel_base : name_hint;
        ds.meta.n_features = n_features;
        ds.meta.n_labels = n_labels;
        ds.meta.feature_kinds.resize(n_features);
        for (std::size_t j = 0; j < n_features; ++j) {
            std::size_t ai = labels_first ? n_labels + j : j;
            ds.meta.feature_kinds[j] = attrs[ai].kind;
        }
        running_sum.assign(n_features, 0.0);
        running_cnt.assign(n_features, 0);
    };

    auto label_attr_index = [&](std::size_t attr_idx) -> long {
        // returns label slot for an attribute index, or -1 if it is a feature
        if (labels_first) {
            if (attr_idx < n_labels) return static_cast<long>(attr_idx);
            return -1;
        }
        if (attr_idx >= n_features) return static_cast<long>(attr_idx - n_features);
        return -1;
    };
    auto feature_attr_index = [&](std::size_t attr_idx) -> long {
        if (labels_first) {
            if (attr_idx >= n_labels) return static_cast<long>(attr_idx - n_labels);
            return -1;
        }
        if (attr_idx < n_features) return static_cast<long>(attr_idx);
        return -1;
    };

    auto store_cell = [&](instance& ins, std::vector<bool>& missing_numeric,
                          std::size_t attr_idx, const std::string& tok0, std::size_t ln) {
        std::string tok = strip_quotes(trim(tok0));
        long li = label_attr_index(attr_idx);
        if (li >= 0) {
            if (tok == "?")
                throw parse_error(ln, "missing value in label attribute '" + attrs[attr_idx].name + "'");
            if (tok == "0")
                ins.y[static_cast<std::size_t>(li)] = 0;
            else if (tok == "1")
                ins.y[static_cast<std::size_t>(li)] = 1;
            else {
                double v = parse_double(tok, ln);
                if (v == 0.0)
                    ins.y[static_cast<std::size_t>(li)] = 0;
                else if (v == 1.0)
                    ins.y[static_cast<std::size_t>(li)] = 1;
                else
                    throw parse_error(ln, "label attribute '" + attrs[attr_idx].name +
                                              "' holds non-binary value '" + tok + "'");
            }
            return;
        }
        long fi = feature_attr_index(attr_idx);
        std::size_t f = static_cast<std::size_t>(fi);
        if (tok == "?") {
            if (ds.meta.feature_kinds[f] == feature_kind::binary) {
                ins.x[f] = 0.0;
            } else {
                ins.x[f] = running_cnt[f] ? running_sum[f] / static_cast<double>(running_cnt[f]) : 0.0;
                missing_numeric[f] = true;
            }
            return;
        }
        double v = parse_double(tok, ln);
        if (ds.meta.feature_kinds[f] == feature_kind::binary && v != 0.0 && v != 1.0)
            throw parse_error(ln, "binary attribute '" + attrs[attr_idx].name +
                                      "' holds non-binary value '" + tok + "'");
        ins.x[f] = v;
    };

    auto commit_row = [&](instance ins, const std::vector<bool>& missing_numeric) {
        for (std::size_t f = 0; f < n_features; ++f) {
            if (ds.meta.feature_kinds[f] == feature_kind::numeric && !missing_numeric[f]) {
                running_sum[f] += ins.x[f];
                ++running_cnt[f];
            }
        }
        ins.stream = stream_id::target();
        ins.t = t++;
        ds.items.push_back(std::move(ins));
    };

    while (std::getline(in, raw)) {
        ++line_no;
        std::string s = trim(raw);
        if (s.empty() || s[0] == '%') continue;

        if (!in_data) {
            std::string ls = lower(s);
            if (ls.rfind("@relation", 0) == 0) {
                relation = strip_quotes(trim(s.substr(9)));
                if (relation.empty()) throw parse_error(line_no, "empty relation name");
                c_flag = meka_label_count(relation, line_no);
                have_relation = true;
            } else if (ls.rfind("@attribute", 0) == 0) {
                std::string rest = trim(s.substr(10));
                std::string name, domain;
                if (!rest.empty() && (rest[0] == '\'' || rest[0] == '"')) {
                    char q = rest[0];
                    std::size_t end = rest.find(q, 1);
                    if (end == std::string::npos) throw parse_error(line_no, "unterminated attribute name");
                    name = rest.substr(1, end - 1);
                    domain = trim(rest.substr(end + 1));
                } else {
                    std::size_t sp = rest.find_first_of(" \t");
                    if (sp == std::string::npos) throw parse_error(line_no, "attribute without a type");
                    name = rest.substr(0, sp);
                    domain = trim(rest.substr(sp));
                }
                std::string dl = lower(domain);
                if (dl == "numeric" || dl == "real" || dl == "integer") {
                    attrs.push_back({name, feature_kind::numeric});
                } else if (is_binary_nominal(domain)) {
                    attrs.push_back({name, feature_kind::binary});
                } else {
                    throw parse_error(line_no, "unsupported attribute type '" + domain +
                                                   "' (numeric or {0,1} nominal expected)");
                }
            } else if (ls.rfind("@data", 0) == 0) {
                finish_header(line_no);
                in_data = true;
            } else {
                throw parse_error(line_no, "unrecognized header line");
            }
            continue;
        }

        // data rows
        instance ins;
        ins.x.assign(n_features, 0.0);
        ins.y.assign(n_labels, 0);
        std::vector<bool> missing_numeric(n_features, false);

        if (s.front() == '{') {
            if (s.back() != '}') throw parse_error(line_no, "unterminated sparse row");
            std::string body = trim(s.substr(1, s.size() - 2));
            if (!body.empty()) {
                for (auto& cell : split(body, ',')) {
                    std::string c = trim(cell);
                    std::size_t sp = c.find_first_of(" \t");
                    if (sp == std::string::npos)
                        throw parse_error(line_no, "sparse cell without a value: '" + c + "'");
                    std::size_t idx = 0;
                    try {
                        idx = static_cast<std::size_t>(std::stoul(c.substr(0, sp)));
                    } catch (...) {
                        throw parse_error(line_no, "bad sparse index '" + c.substr(0, sp) + "'");
                    }
                    if (idx >= attrs.size())
                        throw parse_error(line_no, "sparse index " + std::to_string(idx) +
                                                       " out of range (row has " +
                                              std::to_string(attrs.size()) + " attributes)");
                    store_cell(ins, missing_numeric, idx, c.substr(sp + 1), line_no);
                }
            }
            commit_row(std::move(ins), missing_numeric);
        } else {
            auto cells = split(s, ',');
            if (cells.size() != attrs.size())
                throw parse_error(line_no, "row " + std::to_string(ds.items.size() + 1) + " has " +
                                               std::to_string(cells.size()) + " fields, expected " +
                                               std::to_string(attrs.size()));
            for (std::size_t i = 0; i < cells.size(); ++i)
                store_cell(ins, missing_numeric, i, cells[i], line_no);
            commit_row(std::move(ins), missing_numeric);
        }
    }

    if (!in_data) throw parse_error(line_no, "no @data section");
    ds.meta.validate();
    return ds;
}

dataset read_arff_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    std::string base = path;
    if (auto p = base.find_last_of("/\\"); p != std::string::npos) base = base.substr(p + 1);
    if (auto p = base.rfind('.'); p != std::string::npos) base = base.substr(0, p);
    return read_arff(ss.str(), base);
}

namespace {

std::string fmt_value(double v, feature_kind kind) {
    if (kind == feature_kind::binary) return v == 0.0 ? "0" : "1";
    if (v == std::floor(v) && std::abs(v) < 1e15) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.0f", v);
        return buf;
    }
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

std::string write_arff(const dataset& ds) {
    ds.meta.validate();
    std::ostringstream out;
    out << "@relation '" << (ds.meta.name.empty() ? "stream" : ds.meta.name) << ": -C "
        << ds.meta.n_labels << "'\n\n";
    for (std::size_t q = 0; q < ds.meta.n_labels; ++q)
        out << "@attribute l" << (q + 1) << " {0,1}\n";
    for (std::size_t j = 0; j < ds.meta.n_features; ++j) {
        out << "@attribute f" << (j + 1)
            << (ds.meta.feature_kinds[j] == feature_kind::binary ? " {0,1}\n" : " numeric\n");
    }
    out << "\n@data\n";
    for (const auto& ins : ds.items) {
        for (std::size_t q = 0; q < ds.meta.n_labels; ++q) {
            if (q) out << ',';
            out << static_cast<int>(ins.y[q]);
        }
        for (std::size_t j = 0; j < ds.meta.n_features; ++j)
            out << ',' << fmt_value(ins.x[j], ds.meta.feature_kinds[j]);
        out << '\n';
    }
    return out.str();
}

dataset read_csv(const std::string& text, std::size_t n_labels, const std::string& name_hint) {
    std::istringstream in(text);
    std::string raw;
    std::size_t line_no = 0;
    if (!std::getline(in, raw)) throw parse_error(1, "empty csv");
    ++line_no;
    auto header = split(trim(raw), ',');
    if (n_labels == 0 || header.size() <= n_labels)
        throw parse_error(1, "label count " + std::to_string(n_labels) +
                                 " leaves no feature columns in a " +
                                 std::to_string(header.size()) + "-column csv");
    dataset ds;
    ds.meta.name = name_hint;
    ds.meta.n_labels = n_labels;
    ds.meta.n_features = header.size() - n_labels;
    ds.meta.feature_kinds.assign(ds.meta.n_features, feature_kind::numeric);

    std::uint64_t t = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string s = trim(raw);
        if (s.empty()) continue;
        auto cells = split(s, ',');
        if (cells.size() != header.size())
            throw parse_error(line_no, "row has " + std::to_string(cells.size()) +
                                           " fields, expected " + std::to_string(header.size()));
        instance ins;
        ins.x.reserve(ds.meta.n_features);
        ins.y.reserve(n_labels);
        for (std::size_t j = 0; j < ds.meta.n_features; ++j)
            ins.x.push_back(parse_double(trim(cells[j]), line_no));
        for (std::size_t q = 0; q < n_labels; ++q) {
            double v = parse_double(trim(cells[ds.meta.n_features + q]), line_no);
            if (v != 0.0 && v != 1.0)
                throw parse_error(line_no, "label column holds non-binary value '" +
                                               trim(cells[ds.meta.n_features + q]) + "'");
            ins.y.push_back(v == 1.0 ? 1 : 0);
        }
        ins.stream = stream_id::target();
        ins.t = t++;
        ds.items.push_back(std::move(ins));
    }
    ds.meta.validate();
    return ds;
}

dataset read_csv_file(const std::string& path, std::size_t n_labels) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    std::string base = path;
    if (auto p = base.find_last_of("/\\"); p != std::string::npos) base = base.substr(p + 1);
    if (auto p = base.rfind('.'); p != std::string::npos) base = base.substr(0, p);
    return read_csv(ss.str(), n_labels, base);
}

std::string write_csv(const dataset& ds) {
    ds.meta.validate();
    std::ostringstream out;
    for (std::size_t j = 0; j < ds.meta.n_features; ++j) {
        if (j) out << ',';
        out << 'f' << (j + 1);
    }
    for (std::size_t q = 0; q < ds.meta.n_labels; ++q)
        out << ",l" << (q + 1);
    out << '\n';
    for (const auto& ins : ds.items) {
        for (std::size_t j = 0; j < ds.meta.n_features; ++j) {
            if (j) out << ',';
            out << fmt_value(ins.x[j], ds.meta.feature_kinds[j]);
        }
        for (std::size_t q = 0; q < ds.meta.n_labels; ++q)
            out << ',' << static_cast<int>(ins.y[q]);
        out << '\n';
    }
    return out.str();
}

imbalance_stats dataset_stats(const std::vector<instance>& data) {
    if (data.empty()) throw std::invalid_argument("dataset_stats: empty dataset");
    const std::size_t n_labels = data.front().y.size();
    if (n_labels == 0) throw std::invalid_argument("dataset_stats: no labels");
    for (const auto& ins : data)
        if (ins.y.size() != n_labels)
            throw std::invalid_argument("dataset_stats: inconsistent label arity");

    const double denom = static_cast<double>(n_labels) * static_cast<double>(data.size());
    std::vector<std::uint64_t> pos(n_labels, 0);
    std::uint64_t total_pos = 0, set_minority = 0;
    for (const auto& ins : data) {
        std::uint64_t m = 0;
        for (std::size_t q = 0; q < n_labels; ++q) {
            pos[q] += ins.y[q];
            m += ins.y[q];
        }
        total_pos += m;
        set_minority += std::min<std::uint64_t>(m, n_labels - m);
    }
    std::uint64_t label_minority = 0;
    for (std::size_t q = 0; q < n_labels; ++q)
        label_minority += std::min<std::uint64_t>(pos[q], data.size() - pos[q]);

    imbalance_stats st;
    st.lden = static_cast<double>(total_pos) / denom;
    st.lir = static_cast<double>(label_minority) / denom;
    st.lsir = static_cast<double>(set_minority) / denom;
    return st;
}

namespace {

void stamp(std::vector<instance>& v, int stream_index) {
    for (std::uint64_t i = 0; i < v.size(); ++i) {
        v[i].stream = stream_index == 0 ? stream_id::target() : stream_id::source(stream_index);
        v[i].t = i;
    }
}

} // namespace

std::vector<instance> interleave(std::vector<instance> target,
                                 std::vector<std::vector<instance>> sources,
                                 interleave_policy policy, std::uint64_t /*seed*/) {
    stamp(target, 0);
    for (std::size_t k = 0; k < sources.size(); ++k) stamp(sources[k], static_cast<int>(k + 1));

    std::vector<instance> schedule;
    std::size_t total = target.size();
    for (auto& s : sources) total += s.size();
    schedule.reserve(total);

    if (policy == interleave_policy::round_robin) {
        std::vector<std::size_t> pos(sources.size(), 0);
        std::size_t tpos = 0;
        while (schedule.size() < total) {
            for (std::size_t k = 0; k < sources.size(); ++k)
                if (pos[k] < sources[k].size()) schedule.push_back(sources[k][pos[k]++]);
            if (tpos < target.size()) schedule.push_back(target[tpos++]);
        }
        return schedule;
    }

    // proportional: source k has emitted ceil(len_k * done/T) examples after
    // the done-th target example, so all streams finish on the same cycle
    const std::size_t t_len = std::max<std::size_t>(target.size(), 1);
    std::vector<std::size_t> pos(sources.size(), 0);
    for (std::size_t j = 0; j < target.size(); ++j) {
        for (std::size_t k = 0; k < sources.size(); ++k) {
            std::size_t due = (sources[k].size() * (j + 1) + t_len - 1) / t_len;
            due = std::min(due, sources[k].size());
            while (pos[k] < due) schedule.push_back(sources[k][pos[k]++]);
        }
        schedule.push_back(target[j]);
    }
    for (std::size_t k = 0; k < sources.size(); ++k)
        while (pos[k] < sources[k].size()) schedule.push_back(sources[k][pos[k]++]);
    return schedule;
}

std::vector<instance> interleave_explicit(std::vector<instance> target,
                                          std::vector<std::vector<instance>> sources,
                                          const std::vector<int>& order) {
    stamp(target, 0);
    for (std::size_t k = 0; k < sources.size(); ++k) stamp(sources[k], static_cast<int>(k + 1));

    std::vector<instance> schedule;
    std::vector<std::size_t> pos(sources.size() + 1, 0);
    for (int id : order) {
        if (id < 0 || static_cast<std::size_t>(id) > sources.size())
            throw std::invalid_argument("schedule names unknown stream " + std::to_string(id));
        auto& src = id == 0 ? target : sources[static_cast<std::size_t>(id - 1)];
        auto& p = pos[static_cast<std::size_t>(id)];
        if (p < src.size()) schedule.push_back(src[p++]);
    }
    return schedule;
}

} // namespace marlene
