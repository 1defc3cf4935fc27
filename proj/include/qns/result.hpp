#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace qns {

// Recoverable pipeline failures (infeasible demand, exhausted qubits, ...)
// travel as data; only misuse of an API throws.
struct Error {
    std::string code;
    std::string message;
};

template <typename T>
class Result {
public:
    Result(T value) : value_(std::move(value)), ok_(true) {}
    Result(Error err) : error_(std::move(err)), ok_(false) {}

    static Result fail(std::string code, std::string message) {
        return Result(Error{std::move(code), std::move(message)});
    }

    bool ok() const { return ok_; }
    explicit operator bool() const { return ok_; }

    const T& value() const {
        if (!ok_) throw std::logic_error("Result::value on error: " + error_.code + ": " + error_.message);
        return value_;
    }
    T& value() {
        if (!ok_) throw std::logic_error("Result::value on error: " + error_.code + ": " + error_.message);
        return value_;
    }
    T take() {
        if (!ok_) throw std::logic_error("Result::take on error: " + error_.code + ": " + error_.message);
        return std::move(value_);
    }

    const Error& error() const {
        if (ok_) throw std::logic_error("Result::error on ok value");
        return error_;
    }

private:
    T value_{};
    Error error_{};
    bool ok_ = false;
};

}  // namespace qns
