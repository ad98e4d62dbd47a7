#include <catch2/catch_amalgamated.hpp>

#include <anb/fixtures.hpp>
#include <anb/metrics.hpp>

#include <vector>

namespace {

// Dense layer with zero weight and a fixed bias: always predicts class 1.
anb::ModelGraph constant_model() {
    anb::ModelGraph m;
    m.name = "always_one";
    m.input_shape = {1, 8, 8};
    m.class_count = 4;
    anb::Node d;
    d.id = 0;
    d.kind = anb::LayerKind::Dense;
    d.params.emplace("weight", anb::Tensor({64, 4}));
    d.params.emplace("bias", anb::Tensor({4}, {0.0f, 1.0f, 0.0f, 0.0f}));
    m.nodes.push_back(std::move(d));
    anb::validate_model(m);
    return m;
}

}  // namespace

TEST_CASE("a perfect model scores accuracy 1") {
    const auto m = anb::fixtures::build_tiny_mlp();
    const auto ds = anb::fixtures::make_onehot();
    CHECK(anb::evaluate_accuracy(m, ds) == 1.0);
}

TEST_CASE("a constant predictor scores the base rate on a balanced set") {
    const auto ds = anb::fixtures::make_stripes("balanced", 25, 7);
    CHECK(anb::evaluate_accuracy(constant_model(), ds) == 0.25);
}

TEST_CASE("accuracy does not depend on batch size") {
    const auto m = anb::fixtures::build_tiny_resnet(31);
    const auto ds = anb::fixtures::make_stripes("batching", 13, 55);
    const double full = anb::evaluate_accuracy(m, ds, ds.size());
    CHECK(anb::evaluate_accuracy(m, ds, 1) == full);
    CHECK(anb::evaluate_accuracy(m, ds, 7) == full);
    CHECK(anb::evaluate_accuracy(m, ds, 32) == full);
}

TEST_CASE("evaluate_accuracy validates its inputs") {
    const auto m = anb::fixtures::build_tiny_mlp();
    const auto ds = anb::fixtures::make_onehot();
    CHECK_THROWS_AS(anb::evaluate_accuracy(m, ds, 0),
                    anb::InvalidArgumentError);

    auto wrong = ds;
    wrong.class_count = 7;
    CHECK_THROWS_WITH(
        anb::evaluate_accuracy(m, wrong),
        Catch::Matchers::ContainsSubstring("7 classes but model"));
}

TEST_CASE("normalized accuracy is the exact ratio to the baseline") {
    CHECK(anb::normalized_accuracy(0.45, 0.90) == 0.5);
    CHECK(anb::normalized_accuracy(0.90, 0.90) == 1.0);
    CHECK(anb::normalized_accuracy(0.95, 0.90) > 1.0);  // never clamped
    CHECK(anb::normalized_accuracy(0.0, 0.5) == 0.0);
    CHECK_THROWS_AS(anb::normalized_accuracy(0.5, 0.0),
                    anb::UndefinedBaselineError);
    CHECK_THROWS_AS(anb::normalized_accuracy(0.5, -1.0),
                    anb::UndefinedBaselineError);
}

TEST_CASE("the layer average needs one value per layer") {
    CHECK(anb::average_normalized_accuracy({1.0, 0.5}, 2) == 0.75);
    CHECK(anb::average_normalized_accuracy({0.25}, 1) == 0.25);
    CHECK_THROWS_AS(anb::average_normalized_accuracy({1.0, 0.5}, 3),
                    anb::IncompleteSweepError);
    CHECK_THROWS_AS(anb::average_normalized_accuracy({1.0, 0.5, 0.5}, 2),
                    anb::IncompleteSweepError);
    CHECK_THROWS_AS(anb::average_normalized_accuracy({}, 0),
                    anb::InvalidArgumentError);
}
