#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "epiforge/drrnn.hpp"
#include "epiforge/errors.hpp"
#include "epiforge/rnn.hpp"
#include "epiforge/serialize.hpp"

using namespace epiforge;

TEST_CASE("DR-RNN parameters survive a text round-trip exactly") {
    const DrRnnParams p = init_drrnn(4, 3, 20240901);
    std::ostringstream out;
    save_params(p, out);
    std::istringstream in(out.str());
    const DrRnnParams q = load_drrnn_params(in);
    REQUIRE(q.n == p.n);
    REQUIRE(q.K == p.K);
    REQUIRE(q.W == p.W);
    REQUIRE(q.U.data == p.U.data);
    REQUIRE(q.eta == p.eta);
    REQUIRE(q.beta == p.beta);
    REQUIRE(q.gamma == p.gamma);
    REQUIRE(q.eps_guard == p.eps_guard);

    // The writer is deterministic byte for byte.
    std::ostringstream again;
    save_params(p, again);
    REQUIRE(again.str() == out.str());
}

TEST_CASE("RNN parameters survive a text round-trip exactly") {
    const RnnParams p = init_rnn(3, 2, 2, 7);
    std::ostringstream out;
    save_params(p, out);
    std::istringstream in(out.str());
    const RnnParams q = load_rnn_params(in);
    REQUIRE(q.m == p.m);
    REQUIRE(q.p == p.p);
    REQUIRE(q.q == p.q);
    REQUIRE(q.W.data == p.W.data);
    REQUIRE(q.b == p.b);
    REQUIRE(q.V.data == p.V.data);
    REQUIRE(q.c == p.c);
}

TEST_CASE("LSTM parameters survive a text round-trip exactly") {
    const LstmParams p = init_lstm(3, 2, 2, 99);
    std::ostringstream out;
    save_params(p, out);
    std::istringstream in(out.str());
    const LstmParams q = load_lstm_params(in);
    REQUIRE(q.Wf.data == p.Wf.data);
    REQUIRE(q.Wi.data == p.Wi.data);
    REQUIRE(q.Wo.data == p.Wo.data);
    REQUIRE(q.Wc.data == p.Wc.data);
    REQUIRE(q.bf == p.bf);
    REQUIRE(q.bi == p.bi);
    REQUIRE(q.bo == p.bo);
    REQUIRE(q.bc == p.bc);
    REQUIRE(q.V.data == p.V.data);
    REQUIRE(q.c == p.c);
}

TEST_CASE("peek_params_kind dispatches on the kind line") {
    const std::string dir = std::string(EPIFORGE_WORK_DIR);
    std::filesystem::create_directories(dir);

    const std::string drrnn_path = dir + "/peek_drrnn.txt";
    save_params_file(init_drrnn(3, 2, 1), drrnn_path);
    REQUIRE(peek_params_kind(drrnn_path) == ModelKind::drrnn);

    const std::string lstm_path = dir + "/peek_lstm.txt";
    save_params_file(init_lstm(2, 2, 2, 1), lstm_path);
    REQUIRE(peek_params_kind(lstm_path) == ModelKind::lstm);

    const std::string rnn_path = dir + "/peek_rnn.txt";
    save_params_file(init_rnn(2, 2, 2, 1), rnn_path);
    REQUIRE(peek_params_kind(rnn_path) == ModelKind::rnn);

    REQUIRE_THROWS_AS(peek_params_kind(dir + "/does_not_exist.txt"), Error);
}

TEST_CASE("loading the wrong kind is rejected") {
    const RnnParams p = init_rnn(2, 2, 2, 5);
    std::ostringstream out;
    save_params(p, out);
    std::istringstream in(out.str());
    REQUIRE_THROWS_WITH(load_drrnn_params(in),
                        Catch::Matchers::ContainsSubstring("expected 'drrnn'"));
}

TEST_CASE("corrupted parameter files fail with position information") {
    {
        std::istringstream in("not a params file\n");
        REQUIRE_THROWS_WITH(load_drrnn_params(in),
                            Catch::Matchers::ContainsSubstring("not a parameter file"));
    }
    {
        std::istringstream in("epiforge-params 99\nkind drrnn\n");
        REQUIRE_THROWS_WITH(load_drrnn_params(in),
                            Catch::Matchers::ContainsSubstring("version"));
    }
    {
        // Truncated after the shape lines.
        std::istringstream in("epiforge-params 1\nkind drrnn\nn 2\nK 2\n");
        REQUIRE_THROWS_WITH(load_drrnn_params(in),
                            Catch::Matchers::ContainsSubstring("unexpected end of file"));
    }
    {
        // Wrong row length: W must carry exactly n values.
        std::istringstream in("epiforge-params 1\nkind drrnn\nn 2\nK 2\n"
                              "beta 0.9\ngamma 0.1\neps_guard 1e-08\n"
                              "W 0.1\n");
        try {
            load_drrnn_params(in);
            FAIL("expected a parse error");
        } catch (const Error& e) {
            REQUIRE(e.kind() == ErrorKind::ParseError);
            REQUIRE_THAT(e.what(), Catch::Matchers::ContainsSubstring("line 8"));
        }
    }
    {
        // Non-numeric payload.
        std::istringstream in("epiforge-params 1\nkind drrnn\nn 2\nK 2\n"
                              "beta 0.9\ngamma 0.1\neps_guard 1e-08\n"
                              "W 0.1 oops\n");
        REQUIRE_THROWS_AS(load_drrnn_params(in), Error);
    }
}

TEST_CASE("parse_model_kind accepts only known names") {
    REQUIRE(parse_model_kind("drrnn") == ModelKind::drrnn);
    REQUIRE(parse_model_kind("rnn") == ModelKind::rnn);
    REQUIRE(parse_model_kind("lstm") == ModelKind::lstm);
    REQUIRE_THROWS_AS(parse_model_kind("gru"), Error);
    REQUIRE(std::string(model_kind_name(ModelKind::lstm)) == "lstm");
}
