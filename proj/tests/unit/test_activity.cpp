#include "phast/activity.hpp"

#include "support/fuzz.hpp"
#include "support/generators.hpp"
#include "support/scenario.hpp"

#include <gtest/gtest.h>

#include <filesystem>

using namespace phast;

namespace {

ParseResult parse_file(const std::string& relative) {
    return parse_activity(fixture::read_text(fixture::source_path(relative)));
}

std::string codes(const ParseResult& r) {
    std::string out;
    for (const Diagnostic& d : r.diagnostics) {
        out += format(d) + "\n";
    }
    return out;
}

const char* kMinimal = R"(phast_version: 1
activity: minimal
world:
  objects:
    - name: a
      p: [0, 0, 0]
    - name: b
      p: [1, 0, 0]
      anchors:
        tip: [0, 0, 0.1]
tree:
  fallback: root
  children:
    - sequence: move
      children:
        - condition: near
          kind: distance_leq
          subject: a
          reference: b
          threshold: 2
        - action: go
          scan: project_to
          subject: a
          target: b
)";

std::string with(std::string text, const std::string& from, const std::string& to) {
    const auto at = text.find(from);
    EXPECT_NE(at, std::string::npos) << from;
    return text.replace(at, from.size(), to);
}

}  // namespace

TEST(PourActivity, ParsesToFigureTree) {
    const ParseResult r = parse_file("activities/pour.activity");
    ASSERT_TRUE(r) << codes(r);
    const ActivityDocument& doc = *r.document;
    EXPECT_EQ(doc.name, "pour");
    ASSERT_EQ(doc.phases.size(), 3u);
    std::set<std::string> names;
    std::size_t conditions = 0;
    for (const Phase& p : doc.phases) {
        names.insert(p.name);
        conditions += p.conditions.size();
        EXPECT_EQ(p.actions.size(), 1u);
    }
    EXPECT_EQ(names, (std::set<std::string>{"t", "r_b", "r_n"}));
    EXPECT_EQ(conditions, 5u);

    std::multiset<std::pair<std::string, double>> thresholds;
    for (const Phase& p : doc.phases) {
        for (const ConditionSpec& c : p.conditions) {
            thresholds.insert({std::string(to_string(c.kind)), c.threshold});
        }
    }
    EXPECT_EQ(thresholds, (std::multiset<std::pair<std::string, double>>{{"distance_leq", 0.5},
                                                                           {"distance_geq", 0.2},
                                                                           {"distance_lt", 0.2},
                                                                           {"tilt_gt", 30.0},
                                                                           {"tilt_leq", 30.0}}));
    EXPECT_EQ(doc.tick_rate_hz, 50.0);
    EXPECT_EQ(doc.held_object, "bottle");
}

TEST(PourActivity, CanonicalFixedPoint) {
    for (const char* file : {"activities/pour.activity", "activities/pour_figure_order.activity"}) {
        const std::string text = fixture::read_text(fixture::source_path(file));
        const ParseResult r = parse_activity(text);
        ASSERT_TRUE(r) << codes(r);
        EXPECT_EQ(serialize_activity(*r.document), text) << file;
        EXPECT_EQ(serialize_activity(*r.document), serialize_activity(*r.document));
    }
}

struct CorruptCase {
    const char* file;
    DiagnosticCode code;
};

class CorruptVariant : public ::testing::TestWithParam<CorruptCase> {};

TEST_P(CorruptVariant, RejectedWithMatchingCode) {
    const ParseResult r = parse_file(std::string("tests/data/corrupt/") + GetParam().file);
    EXPECT_FALSE(r);
    EXPECT_TRUE(r.has(GetParam().code)) << codes(r);
    for (const Diagnostic& d : r.diagnostics) {
        EXPECT_GE(d.line, 1);
        EXPECT_GE(d.column, 1);
    }
}

INSTANTIATE_TEST_SUITE_P(
    Corpus, CorruptVariant,
    ::testing::Values(CorruptCase{"wrong_root.activity", DiagnosticCode::RootNotFallback},
                      CorruptCase{"depth_four.activity", DiagnosticCode::DepthExceeded},
                      CorruptCase{"action_before_condition.activity", DiagnosticCode::ActionBeforeCondition},
                      CorruptCase{"zero_actions.activity", DiagnosticCode::NoActions},
                      CorruptCase{"duplicate_labels.activity", DiagnosticCode::DuplicateLabel},
                      CorruptCase{"dangling_object.activity", DiagnosticCode::UnknownObject},
                      CorruptCase{"dangling_anchor.activity", DiagnosticCode::UnknownAnchor},
                      CorruptCase{"unit_mismatch.activity", DiagnosticCode::Unit}));

TEST(Diagnostics, EveryCodeHasATriggeringDocument) {
    const auto dir = fixture::source_path("tests/data/diagnostics");
    std::set<std::string> covered;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        std::string stem = entry.path().stem().string();
        std::replace(stem.begin(), stem.end(), '_', '-');
        const ParseResult r = parse_activity(fixture::read_text(entry.path()));
        EXPECT_FALSE(r) << entry.path();
        bool found = false;
        for (const Diagnostic& d : r.diagnostics) {
            found = found || to_string(d.code) == stem;
        }
        EXPECT_TRUE(found) << entry.path() << "\n" << codes(r);
        covered.insert(stem);
    }
    for (int c = 0; c <= static_cast<int>(DiagnosticCode::NoActions); ++c) {
        const std::string name(to_string(static_cast<DiagnosticCode>(c)));
        EXPECT_TRUE(covered.contains(name)) << "no document for " << name;
    }
}

TEST(Diagnostics, PositionsAndFormat) {
    const ParseResult r = parse_activity(with(kMinimal, "target: b", "target: spoon"));
    ASSERT_EQ(r.diagnostics.size(), 1u);
    const Diagnostic& d = r.diagnostics[0];
    EXPECT_EQ(d.code, DiagnosticCode::UnknownObject);
    EXPECT_EQ(d.line, 24);
    EXPECT_EQ(d.column, 19);
    EXPECT_EQ(format(d), "24:19: error[unknown-object]: unknown object 'spoon'");
}

TEST(Diagnostics, MissingSpoutAnchor) {
    std::string text = fixture::read_text(fixture::source_path("activities/pour.activity"));
    text = with(text, "pivot: neck", "pivot: spout");
    const ParseResult r = parse_activity(text);
    ASSERT_TRUE(r.has(DiagnosticCode::UnknownAnchor));
    EXPECT_NE(r.diagnostics[0].message.find("unknown anchor"), std::string::npos);
}

TEST(Diagnostics, EmptyAndNullDocuments) {
    for (const char* text : {"", "\n\n", "~\n", "# only a comment\n"}) {
        const ParseResult r = parse_activity(text);
        EXPECT_TRUE(r.has(DiagnosticCode::NoPhases)) << '"' << text << '"';
        EXPECT_NE(r.diagnostics[0].message.find("no phases defined"), std::string::npos);
    }
    EXPECT_TRUE(parse_activity("phast_version: 1\n").has(DiagnosticCode::NoPhases));
}

TEST(Diagnostics, UnitSuffixesRejected) {
    for (const char* v : {"50cm", "0.5 m", "30deg", "30\xc2\xb0", "5%"}) {
        const ParseResult r = parse_activity(with(kMinimal, "threshold: 2", std::string("threshold: ") + v));
        EXPECT_TRUE(r.has(DiagnosticCode::Unit)) << v << "\n" << codes(r);
    }
    EXPECT_TRUE(parse_activity(with(kMinimal, "threshold: 2", "threshold: 2\n          unit: deg"))
                    .has(DiagnosticCode::Unit));
    EXPECT_TRUE(parse_activity(with(kMinimal, "threshold: 2", "threshold: 2\n          unit: m")));
}

TEST(Diagnostics, TiltThresholdOutOfRange) {
    const std::string tilt = with(with(kMinimal, "kind: distance_leq", "kind: tilt_leq"),
                                  "          reference: b\n", "");
    EXPECT_TRUE(parse_activity(tilt));
    EXPECT_TRUE(parse_activity(with(tilt, "threshold: 2", "threshold: 120")).has(DiagnosticCode::Unit));
    EXPECT_TRUE(parse_activity(with(tilt, "threshold: 2", "threshold: 2\n          reference: b"))
                    .has(DiagnosticCode::UnknownKey));
}

TEST(Diagnostics, ValueChecks) {
    EXPECT_TRUE(parse_activity(with(kMinimal, "threshold: 2", "threshold: -1"))
                    .has(DiagnosticCode::InvalidValue));
    for (const char* v : {"inf", "nan", "1e999", "-1e999"}) {
        EXPECT_TRUE(parse_activity(with(kMinimal, "threshold: 2", std::string("threshold: ") + v))
                        .has(DiagnosticCode::InvalidValue))
            << v;
    }
    EXPECT_TRUE(parse_activity(with(kMinimal, "threshold: 2", "threshold: .inf"))
                    .has(DiagnosticCode::WrongType));
    EXPECT_TRUE(parse_activity(with(kMinimal, "activity: minimal", "activity: minimal\ntick_rate_hz: 0"))
                    .has(DiagnosticCode::InvalidValue));
    EXPECT_TRUE(parse_activity(with(kMinimal, "p: [0, 0, 0]", "p: [0, 0]"))
                    .has(DiagnosticCode::WrongType));
    EXPECT_TRUE(parse_activity(with(kMinimal, "p: [0, 0, 0]", "p: [0, 0, 0]\n      q: [2, 0, 0, 0]"))
                    .has(DiagnosticCode::InvalidValue));
    EXPECT_TRUE(parse_activity(with(kMinimal, "p: [0, 0, 0]", "p: [0, 0, 0]\n      axis: [0, 0, 3]"))
                    .has(DiagnosticCode::InvalidValue));
    EXPECT_TRUE(parse_activity(with(kMinimal, "world:", "world:\n  held_object: zz"))
                    .has(DiagnosticCode::UnknownObject));
}

TEST(Normalization, NearUnitValuesAreNormalized) {
    const ParseResult r = parse_activity(
        with(kMinimal, "p: [0, 0, 0]", "p: [0, 0, 0]\n      q: [1.0001, 0, 0, 0]\n      axis: [0, 0, 0.9999]"));
    ASSERT_TRUE(r) << codes(r);
    const ObjectDecl& a = r.document->objects[0];
    EXPECT_NEAR(a.pose.orientation.norm(), 1.0, 1e-15);
    EXPECT_NEAR(norm(a.axis), 1.0, 1e-15);

    // Already unit (within 1e-12): kept bit-for-bit.
    const ParseResult exact = parse_activity(
        with(kMinimal, "p: [0, 0, 0]", "p: [0, 0, 0]\n      q: [0.6, 0, 0.8, 0]"));
    ASSERT_TRUE(exact);
    EXPECT_EQ(exact.document->objects[0].pose.orientation, (Quaternion{0.6, 0, 0.8, 0}));
}

TEST(Defaults, OptionalFields) {
    const ParseResult r = parse_activity(kMinimal);
    ASSERT_TRUE(r) << codes(r);
    const ActivityDocument& doc = *r.document;
    EXPECT_EQ(doc.tick_rate_hz, kDefaultTickRateHz);
    EXPECT_EQ(doc.fallthrough, FallthroughMode::PassThrough);
    EXPECT_FALSE(doc.held_object.has_value());
    EXPECT_EQ(doc.objects[0].axis, (Vec3{0, 0, 1}));
    const auto& scan = std::get<ProjectToScan>(doc.phases[0].actions[0].action);
    EXPECT_EQ(scan.gain, kDefaultTranslationGain);
    const Engine engine = build_engine(doc);
    EXPECT_EQ(engine.world().dt, 1.0 / 50.0);
    EXPECT_EQ(build_engine(doc, 10.0).world().dt, 0.1);
}

TEST(Serialize, QuotesWhatNeedsQuoting) {
    ActivityDocument doc = *parse_activity(kMinimal).document;
    doc.name = "two words: \"quoted\"";
    const std::string text = serialize_activity(doc);
    EXPECT_NE(text.find("activity: \"two words: \\\"quoted\\\"\""), std::string::npos);
    EXPECT_EQ(*parse_activity(text).document, doc);

    doc.name = "null";
    EXPECT_EQ(parse_activity(serialize_activity(doc)).document->name, "null");
    doc.name = "1.5";
    EXPECT_EQ(parse_activity(serialize_activity(doc)).document->name, "1.5");
}

TEST(Serialize, RoundTripGeneratedDocuments) {
    gen::Random r(51);
    for (int i = 0; i < 200; ++i) {
        const ActivityDocument doc = gen::document(r);
        const std::string text = serialize_activity(doc);
        const ParseResult back = parse_activity(text);
        ASSERT_TRUE(back) << text << codes(back);
        EXPECT_EQ(*back.document, doc) << text;
        EXPECT_EQ(serialize_activity(*back.document), text);
    }
}

TEST(Parse, TotalOnFuzzCorpus) {
    const std::string seed = fixture::read_text(fixture::source_path("activities/pour.activity"));
    std::size_t accepted = 0;
    for (const std::string& input : fuzz::corpus(seed, 10000)) {
        const ParseResult r = parse_activity(input);
        if (r) {
            ++accepted;
            EXPECT_TRUE(r.diagnostics.empty());
            // Whatever is accepted must build and tick.
            Engine engine = build_engine(*r.document);
            engine.step({0.1, 0.2, 0.3});
        } else {
            EXPECT_FALSE(r.diagnostics.empty());
        }
    }
    EXPECT_LT(accepted, 10000u);
}
