#pragma once

#include <stdexcept>
#include <string>

namespace fcdbn {

enum class Errc {
    shape,
    invalid_kernel,
    invalid_parameter,
    empty_batch,
    divergence,
    not_filtered_layer,
    degenerate_rate,
    degenerate_labels,
    model_state,
    empty_input,
    insufficient_data,
    incompatible_descriptor,
    config,
    invalid_rate,
    invalid_sample,
    degenerate,
    insufficient_pairs,
    matching,
    parse,
    load,
    io,
    usage,
};

const char* to_string(Errc code) noexcept;

/// Single exception type for the library; the code identifies the failure class.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, Errc code, const std::string& what) {
    if (!cond) fail(code, what);
}

}  // namespace fcdbn
