#include "msd/measure_spec.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <vector>

namespace msd {

namespace {

struct Token {
    std::string_view text;
    size_t offset;
};

std::vector<Token> split(std::string_view text, size_t offset, char sep) {
    std::vector<Token> out;
    size_t start = 0;
    while (true) {
        const size_t end = text.find(sep, start);
        const size_t stop = end == std::string_view::npos ? text.size() : end;
        out.push_back({text.substr(start, stop - start), offset + start});
        if (end == std::string_view::npos) break;
        start = end + 1;
    }
    return out;
}

[[noreturn]] void fail(std::string_view spec, const Token& token, const std::string& why) {
    throw std::invalid_argument("bad measure spec '" + std::string(spec) + "': " + why + " at position " +
                                std::to_string(token.offset) + " ('" + std::string(token.text) + "')");
}

double number(std::string_view spec, const Token& token) {
    const char* first = token.text.data();
    const char* last = first + token.text.size();
    // from_chars rejects a leading '+'; accept it for convenience.
    if (first != last && *first == '+') ++first;
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (token.text.empty() || ec != std::errc() || ptr != last || !std::isfinite(value)) {
        fail(spec, token, "malformed number");
    }
    return value;
}

Measure parse_mixture(std::string_view spec, const Token& body) {
    std::vector<MixtureComponent> components;
    double total = 0.0;
    for (const auto& part : split(body.text, body.offset, ',')) {
        const auto fields = split(part.text, part.offset, '@');
        if (fields.size() != 3) fail(spec, part, "expected weight@mean@variance");
        const double w = number(spec, fields[0]);
        const double mean = number(spec, fields[1]);
        const double var = number(spec, fields[2]);
        if (!(w > 0.0)) fail(spec, fields[0], "weight must be positive");
        if (var < 0.0) fail(spec, fields[2], "variance must be non-negative");
        components.push_back({w, mean, var});
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", total);
        fail(spec, body, std::string("weights sum to ") + buf + ", expected 1");
    }
    return MixtureMeasure(components);
}

Measure parse_uniform(std::string_view spec, const Token& body) {
    const auto fields = split(body.text, body.offset, ',');
    if (fields.size() != 2) fail(spec, body, "expected a,b");
    const double a = number(spec, fields[0]);
    const double b = number(spec, fields[1]);
    if (!(a < b)) fail(spec, body, "uniform needs a < b");
    return UniformMeasure(a, b);
}

void append_number(std::string& out, double value) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    out.append(buf, ptr);
}

}  // namespace

Measure parse_measure(std::string_view spec) {
    const size_t colon = spec.find(':');
    if (colon == std::string_view::npos) {
        fail(spec, {spec, 0}, "missing family prefix (mix: or unif:)");
    }
    const Token family{spec.substr(0, colon), 0};
    const Token body{spec.substr(colon + 1), colon + 1};
    if (family.text == "mix") return parse_mixture(spec, body);
    if (family.text == "unif") return parse_uniform(spec, body);
    fail(spec, family, "unknown family");
}

std::string format_measure(const Measure& m) {
    std::string out;
    if (const auto* mix = std::get_if<MixtureMeasure>(&m)) {
        out = "mix:";
        for (Index i = 0; i < mix->size(); ++i) {
            if (i > 0) out += ',';
            append_number(out, mix->weights()(i));
            out += '@';
            append_number(out, mix->means()(i));
            out += '@';
            append_number(out, mix->variances()(i));
        }
    } else if (const auto* unif = std::get_if<UniformMeasure>(&m)) {
        out = "unif:";
        append_number(out, unif->lower());
        out += ',';
        append_number(out, unif->upper());
    } else {
        throw std::invalid_argument("evolved (scaled and noised) measures have no text form");
    }
    return out;
}

}  // namespace msd
