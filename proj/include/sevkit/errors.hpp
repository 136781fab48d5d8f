#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace sevkit {

enum class errc {
    // input / usage
    missing_column,
    unknown_level,
    non_binary_label,
    single_class_data,
    empty_dataset,
    dimension_mismatch,
    version_mismatch,
    corrupt_payload,
    restricted_set_invalid,
    invalid_permutation,
    bad_config,
    io_failure,
    // computation
    reference_not_negative,
    query_not_positive,
    too_many_features,
    dimension_too_large,
    empty_positives,
    all_features_restricted,
    vol_opt_on_nonlinear_model,
    non_finite_loss,
};

class error : public std::runtime_error {
public:
    error(errc code, std::string msg) : std::runtime_error(std::move(msg)), code_(code) {}
    errc code() const noexcept { return code_; }

private:
    errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& msg) { throw error(code, msg); }

// Usage/input errors exit with 2, computation errors with 1.
inline int exit_code_for(errc code) {
    switch (code) {
        case errc::missing_column:
        case errc::unknown_level:
        case errc::non_binary_label:
        case errc::single_class_data:
        case errc::empty_dataset:
        case errc::dimension_mismatch:
        case errc::version_mismatch:
        case errc::corrupt_payload:
        case errc::restricted_set_invalid:
        case errc::invalid_permutation:
        case errc::bad_config:
        case errc::io_failure:
            return 2;
        default:
            return 1;
    }
}

} // namespace sevkit
