#include <doctest.h>

#include <algorithm>
#include <random>

#include "echonle/contour_io.hpp"
#include "fixtures.hpp"

using namespace echonle;

namespace {

std::vector<TracingRecord> ellipse_records(int frame = 0) {
    std::string csv = fixtures::tracings_header() + fixtures::ellipse_tracings_csv("v.avi", frame);
    return parse_volume_tracings(csv).at("v.avi").at(frame);
}

}  // namespace

TEST_CASE("parse_volume_tracings groups rows by video and frame") {
    std::string csv = fixtures::tracings_header() +
                      fixtures::ellipse_tracings_csv("a.avi", 3) +
                      fixtures::ellipse_tracings_csv("a.avi", 17, 14.0) +
                      fixtures::ellipse_tracings_csv("b.avi", 0);
    auto groups = parse_volume_tracings(csv);
    CHECK(groups.size() == 2);
    CHECK(groups.at("a.avi").size() == 2);
    CHECK(groups.at("a.avi").at(3).size() == 21);
    CHECK(groups.at("a.avi").at(17).size() == 21);
    CHECK(groups.at("b.avi").at(0).size() == 21);

    SUBCASE("row order inside a group is preserved") {
        const auto& rows = groups.at("a.avi").at(3);
        CHECK(rows.front().y1 == doctest::Approx(55.0));  // long axis first
        CHECK(rows.front().y2 == doctest::Approx(145.0));
    }
}

TEST_CASE("parse_volume_tracings rejects bad input") {
    SUBCASE("wrong header") {
        CHECK_THROWS_AS(parse_volume_tracings("X1,Y1\n1,2\n"), Error);
    }
    SUBCASE("empty document") {
        try {
            parse_volume_tracings(fixtures::tracings_header());
            FAIL("expected EmptyInput");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::EmptyInput);
        }
    }
    SUBCASE("non-numeric coordinate names the line") {
        std::string csv = fixtures::tracings_header() + "v.avi,1.0,abc,2.0,3.0,0\n";
        try {
            parse_volume_tracings(csv);
            FAIL("expected MalformedRow");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::MalformedRow);
            CHECK(std::string(e.what()).find("line 2") != std::string::npos);
        }
    }
    SUBCASE("negative coordinates rejected") {
        std::string csv = fixtures::tracings_header() + "v.avi,-1.0,2.0,3.0,4.0,0\n";
        CHECK_THROWS_AS(parse_volume_tracings(csv), Error);
    }
    SUBCASE("negative frame rejected") {
        std::string csv = fixtures::tracings_header() + "v.avi,1.0,2.0,3.0,4.0,-1\n";
        CHECK_THROWS_AS(parse_volume_tracings(csv), Error);
    }
}

TEST_CASE("parse_filelist reads reference values") {
    std::string csv = "FileName,EF,ESV,EDV,Extra\nv.avi,62.5,30.1,80.2,ignored\n";
    auto refs = parse_filelist(csv);
    CHECK(refs.at("v.avi").ef == doctest::Approx(62.5));
    CHECK(refs.at("v.avi").esv == doctest::Approx(30.1));
    CHECK(refs.at("v.avi").edv == doctest::Approx(80.2));
}

TEST_CASE("tracing_to_contour assembles a closed contour from chords") {
    ContourFrame f = tracing_to_contour(ellipse_records());
    CHECK(f.points.size() == 40);  // 20 chords, two endpoints each
    validate_frame(f);

    SUBCASE("area close to the analytic ellipse") {
        double area = polygon_area(f.points);
        CHECK(area == doctest::Approx(fixtures::kPi * 45.0 * 20.0).epsilon(0.03));
    }
    SUBCASE("landmarks") {
        CHECK(f.apex.x == doctest::Approx(100.0));
        CHECK(f.apex.y == doctest::Approx(55.0));
        CHECK(f.basal_left.x < 100.0);
        CHECK(f.basal_right.x > 100.0);
        CHECK(f.basal_left.y == doctest::Approx(144.0));
        CHECK(f.basal_right.y == doctest::Approx(144.0));
    }
    SUBCASE("septal wall first: contour runs down the left side in reverse") {
        // first point is nearest basal_left, and the walk reaches the apex
        // before it reaches basal_right
        CHECK((f.points.front() - f.basal_left).norm() < 1e-9);
        size_t apex_pos = 0, br_pos = 0;
        for (size_t i = 0; i < f.points.size(); ++i) {
            if ((f.points[i] - f.apex).norm() <
                (f.points[apex_pos] - f.apex).norm())
                apex_pos = i;
            if ((f.points[i] - f.basal_right).norm() <
                (f.points[br_pos] - f.basal_right).norm())
                br_pos = i;
        }
        CHECK(apex_pos < br_pos);
    }
}

TEST_CASE("tracing_to_contour is chord-order invariant") {
    std::vector<TracingRecord> records = ellipse_records();
    ContourFrame sorted = tracing_to_contour(records);

    std::vector<TracingRecord> shuffled = records;
    std::mt19937 rng(11);
    std::shuffle(shuffled.begin() + 1, shuffled.end(), rng);  // long axis stays first
    ContourFrame out = tracing_to_contour(shuffled);
    CHECK(out == sorted);

    SUBCASE("swapped chord endpoints do not matter") {
        std::vector<TracingRecord> flipped = records;
        for (size_t i = 1; i < flipped.size(); i += 2) {
            std::swap(flipped[i].x1, flipped[i].x2);
            std::swap(flipped[i].y1, flipped[i].y2);
        }
        CHECK(tracing_to_contour(flipped) == sorted);
    }
}

TEST_CASE("tracing_to_contour degenerate inputs") {
    std::vector<TracingRecord> records = ellipse_records();
    SUBCASE("long axis only") {
        std::vector<TracingRecord> only_axis(records.begin(), records.begin() + 1);
        try {
            tracing_to_contour(only_axis);
            FAIL("expected DegenerateContour");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::DegenerateContour);
        }
    }
    SUBCASE("empty") {
        CHECK_THROWS_AS(tracing_to_contour({}), Error);
    }
    SUBCASE("zero-length axis") {
        std::vector<TracingRecord> bad = records;
        bad[0].x2 = bad[0].x1;
        bad[0].y2 = bad[0].y1;
        try {
            tracing_to_contour(bad);
            FAIL("expected DegenerateAxis");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::DegenerateAxis);
        }
    }
}

TEST_CASE("canonicalize is idempotent and order-normalizing") {
    ContourFrame frame = fixtures::ellipse_frame(20.0);
    ContourFrame canon = canonicalize(frame);
    CHECK(canonicalize(canon) == canon);

    SUBCASE("rotated ring maps to the same canonical form") {
        ContourFrame rotated = frame;
        std::rotate(rotated.points.begin(), rotated.points.begin() + 13, rotated.points.end());
        CHECK(canonicalize(rotated) == canon);
    }
    SUBCASE("reversed ring maps to the same canonical form") {
        ContourFrame reversed = frame;
        std::reverse(reversed.points.begin(), reversed.points.end());
        CHECK(canonicalize(reversed) == canon);
    }
}

TEST_CASE("validate_frame enforces the contour invariants") {
    ContourFrame good = fixtures::ellipse_frame(20.0);
    CHECK_NOTHROW(validate_frame(good));

    SUBCASE("self-intersecting ring") {
        ContourFrame bad = good;
        std::swap(bad.points[10], bad.points[30]);
        CHECK_THROWS_AS(validate_frame(bad), Error);
    }
    SUBCASE("apex far from the boundary") {
        ContourFrame bad = good;
        bad.apex = {100.0, 20.0};
        try {
            validate_frame(bad);
            FAIL("expected InvariantViolation");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::InvariantViolation);
        }
    }
    SUBCASE("too few points") {
        ContourFrame bad = good;
        bad.points.resize(2);
        CHECK_THROWS_AS(validate_frame(bad), Error);
    }
    SUBCASE("non-positive spacing") {
        ContourFrame bad = good;
        bad.spacing = 0.0;
        CHECK_THROWS_AS(validate_frame(bad), Error);
    }
}

TEST_CASE("parse_cycle native document") {
    CardiacCycle cycle = fixtures::ellipse_cycle();
    std::string text = cycle_to_json(cycle);
    CardiacCycle parsed = parse_cycle(text, CycleFormat::NativeJson);
    CHECK(parsed.video_id == "fixture");
    CHECK(parsed.ed == cycle.ed);
    CHECK(parsed.es == cycle.es);

    SUBCASE("round-trip is byte-stable") {
        CHECK(cycle_to_json(parsed) == text);
    }
    SUBCASE("equal frame indices rejected") {
        CardiacCycle bad = cycle;
        bad.es.frame_index = bad.ed.frame_index;
        try {
            parse_cycle(cycle_to_json(bad), CycleFormat::NativeJson);
            FAIL("expected InvariantViolation");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::InvariantViolation);
        }
    }
    SUBCASE("missing field is a schema error") {
        try {
            parse_cycle("{\"video_id\": \"x\"}", CycleFormat::NativeJson);
            FAIL("expected SchemaError");
        } catch (const Error& e) {
            CHECK(e.kind() == ErrorKind::SchemaError);
        }
    }
    SUBCASE("reference values survive the round trip") {
        CardiacCycle with_ref = cycle;
        with_ref.reference = ReferenceValues{55.5, 80.0, 35.6};
        CardiacCycle back = parse_cycle(cycle_to_json(with_ref), CycleFormat::NativeJson);
        REQUIRE(back.reference.has_value());
        CHECK(back.reference->ef == doctest::Approx(55.5));
    }
}

TEST_CASE("parse_cycle echonet single-video document") {
    std::string csv = fixtures::tracings_header() +
                      fixtures::ellipse_tracings_csv("v.avi", 5, 20.0) +
                      fixtures::ellipse_tracings_csv("v.avi", 11, 14.0);
    CardiacCycle cycle = parse_cycle(csv, CycleFormat::Echonet);
    CHECK(cycle.video_id == "v.avi");
    // larger-volume frame became ED regardless of frame order
    CHECK(cycle.ed.frame_index == 5);
    CHECK(cycle.es.frame_index == 11);

    SUBCASE("three traced frames rejected") {
        std::string three = csv + fixtures::ellipse_tracings_csv("v.avi", 20, 17.0);
        CHECK_THROWS_AS(parse_cycle(three, CycleFormat::Echonet), Error);
    }
    SUBCASE("two videos rejected") {
        std::string two = csv + fixtures::ellipse_tracings_csv("w.avi", 0);
        CHECK_THROWS_AS(parse_cycle(two, CycleFormat::Echonet), Error);
    }
}

TEST_CASE("order_ed_es picks the larger volume as ED") {
    ContourFrame small = fixtures::ellipse_frame(14.0, 30.0);
    ContourFrame large = fixtures::ellipse_frame(20.0, 30.0);
    auto [ed, es] = order_ed_es(small, large);
    CHECK(ed == large);
    CHECK(es == small);

    SUBCASE("argument order does not matter") {
        auto [ed2, es2] = order_ed_es(large, small);
        CHECK(ed2 == ed);
        CHECK(es2 == es);
    }
    SUBCASE("ties keep input order") {
        auto [ed3, es3] = order_ed_es(small, small);
        CHECK(ed3 == small);
        CHECK(es3 == small);
    }
}
