#pragma once

#include <stdexcept>
#include <string>

namespace p2t {

/// Bad user input: unreadable files, malformed JSON, contract violations on data.
class InputError : public std::runtime_error {
public:
    explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Backend failures that survived retries: network, auth, oversized responses.
class ProviderError : public std::runtime_error {
public:
    explicit ProviderError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace p2t
