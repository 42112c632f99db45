#include <doctest.h>

#include <httplib.h>

#include <atomic>
#include <mutex>
#include <nlohmann/json.hpp>
#include <random>
#include <thread>

#include "stub_service.hpp"
#include "surfaceai/classifier.hpp"
#include "surfaceai/errors.hpp"
#include "surfaceai/synthlab.hpp"

using namespace surfaceai;
using namespace surfaceai::classifier;

TEST_CASE("taxonomy serialization is closed and round-trips") {
    for (auto t : kSurfaceTypes) CHECK(parse_surface_type(to_string(t)) == t);
    for (auto t : kRoadTypes) CHECK(parse_road_type(to_string(t)) == t);
    for (auto q : kQualityClasses) CHECK(parse_quality_class(to_string(q)) == q);
    CHECK(to_string(SurfaceType::paving_stones) == "paving_stones");
    CHECK(to_string(RoadType::no_focus) == "no_focus");
    CHECK_FALSE(parse_surface_type("cobblestone"));
    CHECK_FALSE(parse_surface_type("Asphalt"));
    CHECK(parse_quality_class("3") == QualityClass::intermediate);
}

TEST_CASE("quality score bounds") {
    CHECK_THROWS_AS(QualityScore(0.99), ContractViolation);
    CHECK_THROWS_AS(QualityScore(5.01), ContractViolation);
    CHECK_THROWS_AS(QualityScore(NAN), ContractViolation);
    CHECK(QualityScore(5.0).value() == 5.0);
}

TEST_CASE("quality_to_class rounds half away from zero") {
    CHECK(quality_to_class(QualityScore(1.0)) == QualityClass::excellent);
    CHECK(quality_to_class(QualityScore(2.5)) == QualityClass::intermediate);
    CHECK(quality_to_class(QualityScore(4.49)) == QualityClass::bad);
    CHECK(quality_to_class(QualityScore(1.5)) == QualityClass::good);
    CHECK(quality_to_class(QualityScore(4.5)) == QualityClass::very_bad);
    CHECK(quality_to_class(QualityScore(5.0)) == QualityClass::very_bad);
}

TEST_CASE("quality_to_class is monotone and onto") {
    std::set<QualityClass> seen;
    int prev = 1;
    for (int i = 0; i <= 4000; ++i) {
        const double q = 1.0 + i / 1000.0;
        const auto c = quality_to_class(QualityScore(q));
        CHECK(quality_code(c) >= prev);
        prev = quality_code(c);
        seen.insert(c);
    }
    CHECK(seen.size() == 5);
}

TEST_CASE("prediction row parses to its fields") {
    const auto m = parse_predictions_csv(std::string(kCsvHeader) + "\n42,roadway,0.98,asphalt,0.95,1.7\n");
    REQUIRE(m.size() == 1);
    const auto& p = m.at("42");
    CHECK(p.road_type == RoadType::roadway);
    CHECK(p.road_type_conf == 0.98);
    CHECK(p.surface_type == SurfaceType::asphalt);
    CHECK(p.surface_type_conf == 0.95);
    CHECK(p.quality.value() == 1.7);
}

TEST_CASE("bad rows: fail fast names row and token, lenient counts") {
    const std::string doc = std::string(kCsvHeader) +
                            "\n1,roadway,0.9,asphalt,0.9,2.0"
                            "\n2,roadway,0.9,cobblestone,0.9,2.0"
                            "\n3,roadway,0.9,sett,0.9,7.5"
                            "\n4,path,0.5,unpaved,0.4,4\n";
    try {
        parse_predictions_csv(doc);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        const std::string what = e.what();
        CHECK(what.find("row 3") != std::string::npos);
        CHECK(what.find("cobblestone") != std::string::npos);
    }
    LoadReport rep;
    const auto m = parse_predictions_csv(doc, RowPolicy::lenient, &rep);
    CHECK(m.size() == 2);
    CHECK(rep.rows == 4);
    CHECK(rep.skipped == 2);
    CHECK(rep.skipped_reasons.size() == 2);
}

TEST_CASE("header is mandatory, duplicates: last wins") {
    CHECK_THROWS_AS(parse_predictions_csv("1,roadway,0.9,asphalt,0.9,2.0\n"), ParseError);
    CHECK_THROWS_AS(parse_predictions_csv(""), ParseError);
    LoadReport rep;
    const auto m = parse_predictions_csv(std::string(kCsvHeader) +
                                             "\n7,roadway,0.9,asphalt,0.9,2.0\n7,path,0.8,sett,0.7,3.0\n",
                                         RowPolicy::fail_fast, &rep);
    CHECK(rep.duplicates == 1);
    CHECK(m.at("7").surface_type == SurfaceType::sett);
}

TEST_CASE("generated prediction file loads back exactly") {
    synthlab::ScenarioSpec spec;
    spec.seed = 3;
    spec.n_segments = 40;
    spec.quality_noise_sd = 0.4;
    spec.type_noise_rate = 0.2;
    const auto sc = synthlab::generate_scenario(spec);
    REQUIRE(sc.predictions.size() >= 1000);
    const auto csv = to_predictions_csv(sc.predictions);
    CHECK(parse_predictions_csv(csv) == sc.predictions);
}

TEST_CASE("wire protocol encode/decode") {
    const Prediction p{"a1", RoadType::cycleway, 0.5, SurfaceType::sett, 0.25, QualityScore(3.125)};
    const auto back = decode_predict_response(encode_predict_response({p}));
    REQUIRE(back.size() == 1);
    CHECK(back[0] == p);
    CHECK(nlohmann::json::parse(encode_predict_request({"1", "2"})) ==
          nlohmann::json{{"image_ids", {"1", "2"}}});
    CHECK_THROWS_AS(decode_predict_response("{\"predictions\":[{\"image_id\":\"x\"}]}"), ParseError);
    CHECK_THROWS_AS(decode_predict_response("not json"), ParseError);
}

TEST_CASE("http batching through the seam") {
    std::atomic<int> calls{0};
    PostFn post = [&](const std::string& path, const std::string& body) {
        ++calls;
        CHECK(path == "/v1/predict");
        const auto ids = nlohmann::json::parse(body).at("image_ids").get<std::vector<std::string>>();
        CHECK(ids.size() <= 100);
        std::vector<Prediction> out;
        for (const auto& id : ids)
            out.push_back({id, RoadType::roadway, 1.0, SurfaceType::asphalt, 1.0, QualityScore(2.0)});
        return HttpReply{200, encode_predict_response(out)};
    };
    std::vector<std::string> ids;
    for (int i = 0; i < 250; ++i) ids.push_back(std::to_string(i));
    const HttpPredictor hp("http://stub/v1/", {}, post);
    const auto r = hp.predict(ids);
    CHECK(calls == 3);
    CHECK(r.predictions.size() == 250);
    CHECK(r.missing.empty());
}

TEST_CASE("http errors surface as backend errors") {
    const HttpPredictor down("http://stub", {}, [](const std::string&, const std::string&) {
        return HttpReply{0, "connection refused"};
    });
    CHECK_THROWS_AS(down.predict({"1"}), BackendError);
    const HttpPredictor broken("http://stub", {}, [](const std::string&, const std::string&) {
        return HttpReply{500, "boom"};
    });
    CHECK_THROWS_AS(broken.predict({"1"}), BackendError);
    const HttpPredictor garbled("http://stub", {}, [](const std::string&, const std::string&) {
        return HttpReply{200, "{\"predictions\": 5}"};
    });
    CHECK_THROWS_AS(garbled.predict({"1"}), BackendError);
    CHECK_THROWS_AS(HttpPredictor("ftp://x"), ContractViolation);
}

TEST_CASE("stub service: three ids, batching counter, partial response, health") {
    teststub::StubService stub;
    stub.answer_all = true;
    HttpOptions opts;
    opts.batch_size = 100;
    const HttpPredictor hp(stub.url(), opts);
    CHECK(hp.health());

    const auto three = hp.predict({"a", "b", "c"});
    CHECK(three.predictions.size() == 3);
    CHECK(stub.predict_calls() == 1);

    std::vector<std::string> many;
    for (int i = 0; i < 250; ++i) many.push_back("img" + std::to_string(i));
    stub.reset_calls();
    const auto all = hp.predict(many);
    CHECK(stub.predict_calls() == 3);
    CHECK(all.predictions.size() == 250);

    stub.skip = {"b"};
    const auto partial = hp.predict({"a", "b", "c"});
    CHECK(partial.predictions.size() == 2);
    CHECK(partial.missing == std::vector<std::string>{"b"});
}

TEST_CASE("unreachable endpoint") {
    int port = 0;
    {
        // Grab a free port, then close it so nothing listens there.
        httplib::Server s;
        port = s.bind_to_any_port("127.0.0.1");
    }
    HttpOptions opts;
    opts.timeout_s = 2;
    const HttpPredictor hp("http://127.0.0.1:" + std::to_string(port), opts);
    CHECK_FALSE(hp.health());
    CHECK_THROWS_AS(hp.predict({"1"}), BackendError);
}
