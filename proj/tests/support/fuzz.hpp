#pragma once

// Deterministic corpus of hostile inputs for the activity parser: raw bytes,
// YAML-ish token soup and byte-level mutations of a valid document.

#include <random>
#include <string>
#include <vector>

namespace fuzz {

inline std::vector<std::string> corpus(const std::string& seed_document, std::size_t count,
                                       std::uint64_t seed = 2024) {
    static const char* kTokens[] = {"phast_version: 1\n", "tree:\n", "  children:\n", "- ", "[", "]",
                                    "{", "}", ": ", "\n", "  ", "&a ", "*a", "!!str ", "'", "\"",
                                    "fallback: r\n", "sequence: s\n", "condition: c\n",
                                    "action: a\n", "kind: tilt_gt\n", "threshold: 1e309\n",
                                    "---\n", "...\n", "? ", "|\n", ">\n", "#", "\t", "~", "\xc3\xa9",
                                    "\xff", "0x1F", "-.inf", ".nan", "<<: *a\n"};
    std::mt19937_64 rng(seed);
    auto below = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
    std::vector<std::string> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        std::string s;
        switch (i % 4) {
            case 0: {
                const std::size_t n = below(257);
                for (std::size_t k = 0; k < n; ++k) {
                    s.push_back(static_cast<char>(below(256)));
                }
                break;
            }
            case 1: {
                const std::size_t n = below(60);
                for (std::size_t k = 0; k < n; ++k) {
                    s += kTokens[below(sizeof(kTokens) / sizeof(kTokens[0]))];
                }
                break;
            }
            default: {
                s = seed_document;
                const std::size_t edits = 1 + below(8);
                for (std::size_t e = 0; e < edits && !s.empty(); ++e) {
                    const std::size_t at = below(s.size());
                    switch (below(4)) {
                        case 0:
                            s[at] = static_cast<char>(below(256));
                            break;
                        case 1:
                            s.erase(at, 1 + below(16));
                            break;
                        case 2:
                            s.insert(at, kTokens[below(sizeof(kTokens) / sizeof(kTokens[0]))]);
                            break;
                        default:
                            s.resize(at);
                            break;
                    }
                }
                break;
            }
        }
        out.push_back(std::move(s));
    }
    // Pathological nesting.
    out.push_back(std::string(5000, '[') + std::string(5000, ']'));
    out.push_back(std::string(5000, '{'));
    std::string deep = "phast_version: 1\ntree:\n  sequence: s0\n  children:\n";
    for (std::size_t d = 1; d < 200; ++d) {
        deep += std::string(4 * d, ' ') + "- sequence: s" + std::to_string(d) + "\n" +
                std::string(4 * d + 2, ' ') + "children:\n";
    }
    deep += std::string(800, ' ') + "- action: a\n";
    out.push_back(deep);
    return out;
}

}  // namespace fuzz
