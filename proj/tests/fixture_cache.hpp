#pragma once

#include <filesystem>
#include <string>

#include <unistd.h>

#include <anb/fixtures.hpp>
#include <anb/model_io.hpp>

// Process-wide fixture cache. Training the CNN takes a few seconds, so every
// test that needs it shares one instance; the on-disk copies are written once
// from the same objects.

namespace testfx {

inline const std::filesystem::path& scratch_root() {
    static const std::filesystem::path p = [] {
        const auto d = std::filesystem::temp_directory_path() /
                       ("anb_test_" + std::to_string(::getpid()));
        std::filesystem::create_directories(d);
        return d;
    }();
    return p;
}

inline std::filesystem::path fresh_dir(const std::string& label) {
    static int counter = 0;
    const auto d = scratch_root() / (label + "_" + std::to_string(counter++));
    std::filesystem::create_directories(d);
    return d;
}

inline const anb::ModelGraph& trained_cnn_nobn() {
    static const anb::ModelGraph m = anb::fixtures::train_tiny_cnn_nobn(7);
    return m;
}

inline const anb::ModelGraph& trained_cnn() {
    static const anb::ModelGraph m = anb::fixtures::add_batch_norm(
        trained_cnn_nobn(),
        anb::fixtures::make_stripes("stripes_train", 150, 1001), "tiny_cnn");
    return m;
}

inline const anb::Dataset& stripes_test() {
    static const anb::Dataset d =
        anb::fixtures::make_stripes("stripes_test", 40, 2002);
    return d;
}

/// Fixture files on disk, identical to what `make-fixtures` writes.
inline const std::filesystem::path& fixture_dir() {
    static const std::filesystem::path p = [] {
        const auto d = scratch_root() / "fixtures";
        std::filesystem::create_directories(d);
        anb::save_model(anb::fixtures::build_tiny_mlp(), d / "tiny_mlp.anb");
        anb::save_model(trained_cnn_nobn(), d / "tiny_cnn_nobn.anb");
        anb::save_model(trained_cnn(), d / "tiny_cnn.anb");
        anb::save_model(anb::fixtures::build_tiny_resnet(5),
                        d / "tiny_resnet.anb");
        anb::save_dataset(stripes_test(), d / "stripes_test.and");
        anb::save_dataset(anb::fixtures::make_onehot(), d / "onehot.and");
        return d;
    }();
    return p;
}

}  // namespace testfx
