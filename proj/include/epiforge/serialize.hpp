#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "epiforge/drrnn.hpp"
#include "epiforge/errors.hpp"
#include "epiforge/rnn.hpp"
#include "epiforge/textio.hpp"

namespace epiforge {

/// Which learned forecaster a parameter file holds.
enum class ModelKind { drrnn, rnn, lstm };

inline const char* model_kind_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::drrnn: return "drrnn";
        case ModelKind::rnn: return "rnn";
        case ModelKind::lstm: return "lstm";
    }
    return "?";
}

inline ModelKind parse_model_kind(const std::string& name) {
    if (name == "drrnn") return ModelKind::drrnn;
    if (name == "rnn") return ModelKind::rnn;
    if (name == "lstm") return ModelKind::lstm;
    raise(ErrorKind::ParseError, "unknown model kind '" + name + "'");
}

// Parameter files are line-oriented text: a magic+version line, a kind line,
// integer shape lines, then labeled rows of %.17g numbers. Deterministic to
// the byte for identical parameters.

namespace detail {

constexpr const char* kParamsMagic = "epiforge-params";
constexpr int kParamsVersion = 1;

inline void write_vector_line(std::ostream& out, const char* label, std::span<const double> v) {
    out << label;
    for (double x : v) out << ' ' << format_double(x);
    out << '\n';
}

class ParamReader {
public:
    ParamReader(std::istream& in, const char* what) : in_(in), what_(what) {}

    std::vector<std::string> next_line() {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_no_;
            auto tokens = split_whitespace(line);
            if (!tokens.empty()) return tokens;
        }
        raise(ErrorKind::ParseError, std::string(what_) + ": unexpected end of file");
    }

    std::vector<double> labeled_row(const char* label, std::size_t count) {
        auto tokens = next_line();
        if (tokens[0] != label)
            fail("expected row '" + std::string(label) + "', got '" + tokens[0] + "'");
        if (tokens.size() != count + 1)
            fail("row '" + std::string(label) + "' needs " + std::to_string(count) + " values");
        std::vector<double> values(count);
        for (std::size_t j = 0; j < count; ++j)
            values[j] = parse_double(tokens[j + 1], line_no_, what_);
        return values;
    }

    double labeled_scalar(const char* label) { return labeled_row(label, 1)[0]; }

    long labeled_int(const char* label) {
        auto tokens = next_line();
        if (tokens[0] != label || tokens.size() != 2)
            fail("expected '" + std::string(label) + " <integer>'");
        return parse_int(tokens[1], line_no_, what_);
    }

    std::string labeled_word(const char* label) {
        auto tokens = next_line();
        if (tokens[0] != label || tokens.size() != 2)
            fail("expected '" + std::string(label) + " <word>'");
        return tokens[1];
    }

    [[noreturn]] void fail(const std::string& msg) const {
        raise(ErrorKind::ParseError,
              std::string(what_) + " line " + std::to_string(line_no_) + ": " + msg);
    }

    std::size_t line_no() const { return line_no_; }

private:
    std::istream& in_;
    const char* what_;
    std::size_t line_no_ = 0;
};

inline void read_params_preamble(ParamReader& reader, ModelKind expected) {
    auto magic = reader.next_line();
    if (magic.size() != 2 || magic[0] != kParamsMagic)
        reader.fail("not a parameter file");
    if (magic[1] != std::to_string(kParamsVersion))
        reader.fail("unsupported parameter file version " + magic[1]);
    const std::string kind = reader.labeled_word("kind");
    if (parse_model_kind(kind) != expected)
        reader.fail("parameter file holds a '" + kind + "' model, expected '" +
                    model_kind_name(expected) + "'");
}

} // namespace detail

// --------------------------- DR-RNN ---------------------------------------

inline void save_params(const DrRnnParams& p, std::ostream& out) {
    p.check();
    out << detail::kParamsMagic << ' ' << detail::kParamsVersion << '\n';
    out << "kind drrnn\n";
    out << "n " << p.n << '\n';
    out << "K " << p.K << '\n';
    out << "beta " << detail::format_double(p.beta) << '\n';
    out << "gamma " << detail::format_double(p.gamma) << '\n';
    out << "eps_guard " << detail::format_double(p.eps_guard) << '\n';
    detail::write_vector_line(out, "W", p.W);
    for (std::size_t row = 0; row < p.U.rows; ++row)
        detail::write_vector_line(out, "U",
                                  std::span<const double>(p.U.data).subspan(row * p.U.cols, p.U.cols));
    detail::write_vector_line(out, "eta", p.eta);
}

inline DrRnnParams load_drrnn_params(std::istream& in, const char* what = "drrnn params") {
    detail::ParamReader reader(in, what);
    detail::read_params_preamble(reader, ModelKind::drrnn);
    DrRnnParams p;
    p.n = static_cast<std::size_t>(reader.labeled_int("n"));
    p.K = static_cast<std::size_t>(reader.labeled_int("K"));
    if (p.n == 0 || p.K < 1) reader.fail("invalid shape");
    p.beta = reader.labeled_scalar("beta");
    p.gamma = reader.labeled_scalar("gamma");
    p.eps_guard = reader.labeled_scalar("eps_guard");
    p.W = reader.labeled_row("W", p.n);
    p.U = Matrix(p.n, p.n);
    for (std::size_t row = 0; row < p.n; ++row) {
        auto vals = reader.labeled_row("U", p.n);
        std::copy(vals.begin(), vals.end(), p.U.data.begin() + static_cast<std::ptrdiff_t>(row * p.n));
    }
    p.eta = reader.labeled_row("eta", p.K - 1);
    p.check();
    return p;
}

// --------------------------- plain RNN -------------------------------------

inline void save_params(const RnnParams& p, std::ostream& out) {
    p.check();
    out << detail::kParamsMagic << ' ' << detail::kParamsVersion << '\n';
    out << "kind rnn\n";
    out << "m " << p.m << '\n';
    out << "p " << p.p << '\n';
    out << "q " << p.q << '\n';
    for (std::size_t row = 0; row < p.W.rows; ++row)
        detail::write_vector_line(out, "W",
                                  std::span<const double>(p.W.data).subspan(row * p.W.cols, p.W.cols));
    detail::write_vector_line(out, "b", p.b);
    for (std::size_t row = 0; row < p.V.rows; ++row)
        detail::write_vector_line(out, "V",
                                  std::span<const double>(p.V.data).subspan(row * p.V.cols, p.V.cols));
    detail::write_vector_line(out, "c", p.c);
}

inline RnnParams load_rnn_params(std::istream& in, const char* what = "rnn params") {
    detail::ParamReader reader(in, what);
    detail::read_params_preamble(reader, ModelKind::rnn);
    RnnParams p;
    p.m = static_cast<std::size_t>(reader.labeled_int("m"));
    p.p = static_cast<std::size_t>(reader.labeled_int("p"));
    p.q = static_cast<std::size_t>(reader.labeled_int("q"));
    if (p.m == 0 || p.p == 0 || p.q == 0) reader.fail("invalid shape");
    auto read_matrix = [&](const char* label, std::size_t rows, std::size_t cols) {
        Matrix mat(rows, cols);
        for (std::size_t row = 0; row < rows; ++row) {
            auto vals = reader.labeled_row(label, cols);
            std::copy(vals.begin(), vals.end(),
                      mat.data.begin() + static_cast<std::ptrdiff_t>(row * cols));
        }
        return mat;
    };
    p.W = read_matrix("W", p.m, p.m + p.p);
    p.b = reader.labeled_row("b", p.m);
    p.V = read_matrix("V", p.q, p.m);
    p.c = reader.labeled_row("c", p.q);
    p.check();
    return p;
}

// --------------------------- LSTM ------------------------------------------

inline void save_params(const LstmParams& p, std::ostream& out) {
    p.check();
    out << detail::kParamsMagic << ' ' << detail::kParamsVersion << '\n';
    out << "kind lstm\n";
    out << "m " << p.m << '\n';
    out << "p " << p.p << '\n';
    out << "q " << p.q << '\n';
    auto write_matrix = [&](const char* label, const Matrix& mat) {
        for (std::size_t row = 0; row < mat.rows; ++row)
            detail::write_vector_line(out, label,
                                      std::span<const double>(mat.data).subspan(row * mat.cols, mat.cols));
    };
    write_matrix("Wf", p.Wf);
    write_matrix("Wi", p.Wi);
    write_matrix("Wo", p.Wo);
    write_matrix("Wc", p.Wc);
    detail::write_vector_line(out, "bf", p.bf);
    detail::write_vector_line(out, "bi", p.bi);
    detail::write_vector_line(out, "bo", p.bo);
    detail::write_vector_line(out, "bc", p.bc);
    write_matrix("V", p.V);
    detail::write_vector_line(out, "c", p.c);
}

inline LstmParams load_lstm_params(std::istream& in, const char* what = "lstm params") {
    detail::ParamReader reader(in, what);
    detail::read_params_preamble(reader, ModelKind::lstm);
    LstmParams p;
    p.m = static_cast<std::size_t>(reader.labeled_int("m"));
    p.p = static_cast<std::size_t>(reader.labeled_int("p"));
    p.q = static_cast<std::size_t>(reader.labeled_int("q"));
    if (p.m == 0 || p.p == 0 || p.q == 0) reader.fail("invalid shape");
    auto read_matrix = [&](const char* label, std::size_t rows, std::size_t cols) {
        Matrix mat(rows, cols);
        for (std::size_t row = 0; row < rows; ++row) {
            auto vals = reader.labeled_row(label, cols);
            std::copy(vals.begin(), vals.end(),
                      mat.data.begin() + static_cast<std::ptrdiff_t>(row * cols));
        }
        return mat;
    };
    p.Wf = read_matrix("Wf", p.m, p.m + p.p);
    p.Wi = read_matrix("Wi", p.m, p.m + p.p);
    p.Wo = read_matrix("Wo", p.m, p.m + p.p);
    p.Wc = read_matrix("Wc", p.m, p.m + p.p);
    p.bf = reader.labeled_row("bf", p.m);
    p.bi = reader.labeled_row("bi", p.m);
    p.bo = reader.labeled_row("bo", p.m);
    p.bc = reader.labeled_row("bc", p.m);
    p.V = read_matrix("V", p.q, p.m);
    p.c = reader.labeled_row("c", p.q);
    p.check();
    return p;
}

// --------------------------- file helpers -----------------------------------

template <typename Params>
void save_params_file(const Params& p, const std::string& path) {
    std::ofstream out(path);
    if (!out) raise(ErrorKind::IoError, "cannot open for writing: " + path);
    save_params(p, out);
    if (!out) raise(ErrorKind::IoError, "write failed: " + path);
}

/// Read only the kind line so a caller can dispatch to the right loader.
inline ModelKind peek_params_kind(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(ErrorKind::IoError, "cannot open for reading: " + path);
    detail::ParamReader reader(in, path.c_str());
    auto magic = reader.next_line();
    if (magic.size() != 2 || magic[0] != detail::kParamsMagic)
        reader.fail("not a parameter file");
    return parse_model_kind(reader.labeled_word("kind"));
}

inline DrRnnParams load_drrnn_params_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(ErrorKind::IoError, "cannot open for reading: " + path);
    return load_drrnn_params(in, path.c_str());
}

inline RnnParams load_rnn_params_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(ErrorKind::IoError, "cannot open for reading: " + path);
    return load_rnn_params(in, path.c_str());
}

inline LstmParams load_lstm_params_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(ErrorKind::IoError, "cannot open for reading: " + path);
    return load_lstm_params(in, path.c_str());
}

} // namespace epiforge
