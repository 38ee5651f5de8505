#include "robroute/serialize.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "robroute/csv.hpp"
#include "robroute/errors.hpp"

namespace robroute {

namespace {

void write_vector(std::ostream& out, const std::string& name, const Eigen::VectorXd& v) {
    out << '[' << name << "]\n";
    for (int i = 0; i < v.size(); ++i) {
        if (i) out << ',';
        out << csv::format_double(v(i));
    }
    out << '\n';
}

void write_matrix(std::ostream& out, const std::string& name, const Eigen::MatrixXd& m) {
    out << '[' << name << "]\n";
    for (int i = 0; i < m.rows(); ++i) {
        for (int j = 0; j < m.cols(); ++j) {
            if (j) out << ',';
            out << csv::format_double(m(i, j));
        }
        out << '\n';
    }
}

void write_ints(std::ostream& out, const std::string& key, const std::vector<int>& v) {
    out << key << " =";
    for (int x : v) out << ' ' << x;
    out << '\n';
}

// Parsed document: scalars plus named numeric blocks, in file order per key.
struct Doc {
    std::map<std::string, std::vector<std::string>> scalars;
    std::map<std::string, std::vector<std::vector<std::vector<double>>>> blocks;

    const std::string& scalar(const std::string& key, std::size_t idx = 0) const {
        const auto it = scalars.find(key);
        require(it != scalars.end() && idx < it->second.size(), ErrorCode::ParseError,
                "missing key '" + key + "'");
        return it->second[idx];
    }
    double number(const std::string& key, std::size_t idx = 0) const {
        return csv::parse_double(scalar(key, idx), key);
    }
    const std::vector<std::vector<double>>& block(const std::string& name, std::size_t idx = 0) const {
        const auto it = blocks.find(name);
        require(it != blocks.end() && idx < it->second.size(), ErrorCode::ParseError,
                "missing block '" + name + "'");
        return it->second[idx];
    }
};

Doc parse_doc(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorCode::IoError, "cannot open " + path);
    Doc doc;
    std::string line;
    std::string current_block;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (line.rfind("robroute-set", 0) == 0) continue;
        if (line.front() == '[' && line.back() == ']') {
            current_block = line.substr(1, line.size() - 2);
            doc.blocks[current_block].push_back({});
            continue;
        }
        const auto eq = line.find(" = ");
        if (eq != std::string::npos && line.find(',') == std::string::npos) {
            current_block.clear();
            doc.scalars[line.substr(0, eq)].push_back(line.substr(eq + 3));
            continue;
        }
        if (!current_block.empty()) {
            std::vector<double> row;
            for (const auto& f : csv::split_line(line)) row.push_back(csv::parse_double(f, path));
            doc.blocks[current_block].back().push_back(std::move(row));
            continue;
        }
        // Scalar lines without commas already handled; a key = v1 v2 ... list.
        const auto eq2 = line.find(" = ");
        require(eq2 != std::string::npos, ErrorCode::ParseError, "unparseable line: " + line);
        doc.scalars[line.substr(0, eq2)].push_back(line.substr(eq2 + 3));
    }
    return doc;
}

Eigen::VectorXd to_vector(const std::vector<std::vector<double>>& block) {
    require(block.size() == 1, ErrorCode::ParseError, "expected a single-row block");
    Eigen::VectorXd v(static_cast<Eigen::Index>(block[0].size()));
    for (std::size_t i = 0; i < block[0].size(); ++i) v(static_cast<Eigen::Index>(i)) = block[0][i];
    return v;
}

Eigen::MatrixXd to_matrix(const std::vector<std::vector<double>>& block) {
    require(!block.empty(), ErrorCode::ParseError, "empty matrix block");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(block.size()),
                      static_cast<Eigen::Index>(block[0].size()));
    for (std::size_t i = 0; i < block.size(); ++i) {
        require(block[i].size() == block[0].size(), ErrorCode::ParseError, "ragged matrix block");
        for (std::size_t j = 0; j < block[i].size(); ++j) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = block[i][j];
        }
    }
    return m;
}

std::vector<int> parse_ints(const std::string& s) {
    std::vector<int> out;
    std::istringstream in(s);
    int v;
    while (in >> v) out.push_back(v);
    return out;
}

void write_grouping(std::ostream& out, const Grouping& g) {
    out << "grouping_method = "
        << (g.method == Grouping::Method::random ? "random" : "hierarchical") << '\n';
    out << "n_subsets = " << g.subsets.size() << '\n';
    for (const auto& s : g.subsets) write_ints(out, "subset", s);
}

Grouping read_grouping(const Doc& doc) {
    Grouping g;
    g.method = doc.scalar("grouping_method") == "random" ? Grouping::Method::random
                                                         : Grouping::Method::hierarchical;
    const int count = static_cast<int>(doc.number("n_subsets"));
    for (int i = 0; i < count; ++i) g.subsets.push_back(parse_ints(doc.scalar("subset", static_cast<std::size_t>(i))));
    return g;
}

} // namespace

void save_model(const UncertaintyModel& model, const std::string& path) {
    std::ofstream out(path);
    require(out.good(), ErrorCode::IoError, "cannot write " + path);
    out << "robroute-set v1\n";
    std::visit(
        [&out](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, Eigen::VectorXd>) {
                out << "type = nominal\n";
                write_vector(out, "costs", m);
            } else if constexpr (std::is_same_v<T, BudgetedSet>) {
                out << "type = budgeted\ngamma = " << m.gamma << '\n';
                write_vector(out, "c_lo", m.c_lo);
                write_vector(out, "d", m.d);
            } else if constexpr (std::is_same_v<T, EllipsoidSet>) {
                out << "type = ellipsoidal\nlambda = " << csv::format_double(m.lambda_size)
                    << "\nridge = " << csv::format_double(m.ridge) << '\n';
                write_vector(out, "center", m.center);
                write_matrix(out, "shape", m.shape);
            } else if constexpr (std::is_same_v<T, SvcUncertainty>) {
                out << "type = svc\n";
                write_grouping(out, m.grouping);
                for (const auto& model : m.models) {
                    out << "theta = " << csv::format_double(model.theta) << '\n';
                    out << "nu = " << csv::format_double(model.nu) << '\n';
                    out << "box_cap = " << csv::format_double(model.box_cap) << '\n';
                    write_ints(out, "bsv_pos", [&] {
                        std::vector<int> pos;
                        for (int b : model.bsv_index) {
                            for (std::size_t s = 0; s < model.sv_index.size(); ++s) {
                                if (model.sv_index[s] == b) pos.push_back(static_cast<int>(s));
                            }
                        }
                        return pos;
                    }());
                    write_vector(out, "alpha", model.sv_alpha);
                    write_matrix(out, "q", model.kernel.q);
                    write_vector(out, "l", model.kernel.l);
                    write_matrix(out, "sv", model.sv_data);
                }
            } else if constexpr (std::is_same_v<T, MklUncertainty>) {
                out << "type = mkl-svc\n";
                write_grouping(out, m.grouping);
                for (const auto& model : m.models) {
                    out << "rho = " << csv::format_double(model.rho) << '\n';
                    out << "nu = " << csv::format_double(model.nu) << '\n';
                    out << "kappa = " << csv::format_double(model.kappa) << '\n';
                    write_ints(out, "selected", model.selected);
                    write_ints(out, "bsv_pos", [&] {
                        std::vector<int> pos;
                        for (int b : model.bsv_index) {
                            for (std::size_t s = 0; s < model.sv_index.size(); ++s) {
                                if (model.sv_index[s] == b) pos.push_back(static_cast<int>(s));
                            }
                        }
                        return pos;
                    }());
                    write_vector(out, "weights", model.weights);
                    write_matrix(out, "directions", model.directions);
                    write_vector(out, "scales", model.scales);
                    write_vector(out, "alpha", model.sv_alpha);
                    write_matrix(out, "sv", model.sv_data);
                }
            } else { // WassersteinAmbiguity
                out << "type = drsp\nepsilon = " << csv::format_double(m.epsilon)
                    << "\nalpha_level = " << csv::format_double(m.alpha) << '\n';
                write_vector(out, "support_lo", m.support_lo);
                write_vector(out, "support_hi", m.support_hi);
                write_matrix(out, "samples", m.samples);
            }
        },
        model);
}

UncertaintyModel load_model(const std::string& path) {
    const Doc doc = parse_doc(path);
    const std::string type = doc.scalar("type");
    if (type == "nominal") {
        return Eigen::VectorXd(to_vector(doc.block("costs")));
    }
    if (type == "budgeted") {
        BudgetedSet s;
        s.gamma = static_cast<int>(doc.number("gamma"));
        s.c_lo = to_vector(doc.block("c_lo"));
        s.d = to_vector(doc.block("d"));
        return s;
    }
    if (type == "ellipsoidal") {
        EllipsoidSet s;
        s.lambda_size = doc.number("lambda");
        s.ridge = doc.number("ridge");
        s.center = to_vector(doc.block("center"));
        s.shape = to_matrix(doc.block("shape"));
        return s;
    }
    if (type == "svc") {
        SvcUncertainty u;
        u.grouping = read_grouping(doc);
        const std::size_t count = u.grouping.subsets.size();
        for (std::size_t f = 0; f < count; ++f) {
            SvcModel m;
            m.theta = doc.number("theta", f);
            m.nu = doc.number("nu", f);
            m.box_cap = doc.number("box_cap", f);
            m.sv_alpha = to_vector(doc.block("alpha", f));
            m.alpha = m.sv_alpha;
            m.kernel.q = to_matrix(doc.block("q", f));
            m.kernel.l = to_vector(doc.block("l", f));
            m.sv_data = to_matrix(doc.block("sv", f));
            for (int i = 0; i < static_cast<int>(m.sv_data.rows()); ++i) m.sv_index.push_back(i);
            for (int b : parse_ints(doc.scalar("bsv_pos", f))) m.bsv_index.push_back(b);
            u.models.push_back(std::move(m));
        }
        return u;
    }
    if (type == "mkl-svc") {
        MklUncertainty u;
        u.grouping = read_grouping(doc);
        const std::size_t count = u.grouping.subsets.size();
        for (std::size_t f = 0; f < count; ++f) {
            MklModel m;
            m.rho = doc.number("rho", f);
            m.nu = doc.number("nu", f);
            m.kappa = doc.number("kappa", f);
            m.selected = parse_ints(doc.scalar("selected", f));
            m.weights = to_vector(doc.block("weights", f));
            m.directions = to_matrix(doc.block("directions", f));
            m.scales = to_vector(doc.block("scales", f));
            m.sv_alpha = to_vector(doc.block("alpha", f));
            m.alpha = m.sv_alpha;
            m.sv_data = to_matrix(doc.block("sv", f));
            for (int i = 0; i < static_cast<int>(m.sv_data.rows()); ++i) m.sv_index.push_back(i);
            for (int b : parse_ints(doc.scalar("bsv_pos", f))) m.bsv_index.push_back(b);
            u.models.push_back(std::move(m));
        }
        return u;
    }
    if (type == "drsp") {
        WassersteinAmbiguity amb;
        amb.epsilon = doc.number("epsilon");
        amb.alpha = doc.number("alpha_level");
        amb.support_lo = to_vector(doc.block("support_lo"));
        amb.support_hi = to_vector(doc.block("support_hi"));
        amb.samples = to_matrix(doc.block("samples"));
        return amb;
    }
    raise(ErrorCode::ParseError, "unknown model type '" + type + "'");
}

} // namespace robroute
