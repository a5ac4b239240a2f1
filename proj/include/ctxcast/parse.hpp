#pragma once

/// @file parse.hpp
/// Structured-output extraction: tag-delimited blocks, forecast bodies in
/// "(timestamp, value)" line format, and judge verdicts.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <map>
#include <string>
#include <vector>

#include "ctxcast/errors.hpp"
#include "ctxcast/timestamp.hpp"

namespace ctxcast {

struct TaggedBlock {
    std::string tag;
    std::string body;
    std::size_t start = 0;  // offset of body start in source
    std::size_t end = 0;    // offset one past body end
};

/// First well-formed <tag>...</tag> block; matching is case-sensitive and
/// the body never contains its own closing tag.
inline TaggedBlock extract_tagged(const std::string& text, const std::string& tag) {
    if (tag.empty()) throw Error("extract_tagged: empty tag");
    const std::string open = "<" + tag + ">";
    const std::string close = "</" + tag + ">";
    const auto open_pos = text.find(open);
    if (open_pos == std::string::npos) throw MissingOpenTag(tag);
    const auto body_start = open_pos + open.size();
    const auto close_pos = text.find(close, body_start);
    if (close_pos == std::string::npos) throw MissingCloseTag(tag);
    TaggedBlock b;
    b.tag = tag;
    b.body = text.substr(body_start, close_pos - body_start);
    b.start = body_start;
    b.end = close_pos;
    return b;
}

namespace detail {

inline std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

}  // namespace detail

/// Parses a forecast body of "(timestamp, value)" lines into values ordered
/// by `expected`. Every expected timestamp must appear exactly once; blank
/// lines are tolerated, anything else is an error.
inline std::vector<double> parse_forecast_block(const std::string& body,
                                                const std::vector<Timestamp>& expected) {
    if (expected.empty()) throw Error("parse_forecast_block: no expected timestamps");
    std::map<std::int64_t, double> values;

    int lineno = 0;
    std::size_t pos = 0;
    while (pos <= body.size()) {
        const auto eol = body.find('\n', pos);
        std::string line = body.substr(pos, eol == std::string::npos ? std::string::npos
                                                                     : eol - pos);
        pos = eol == std::string::npos ? body.size() + 1 : eol + 1;
        ++lineno;
        const std::string t = detail::trim(line);
        if (t.empty()) continue;
        if (t.front() != '(' || t.back() != ')') throw UnparsableLine(lineno, line);
        const std::string inner = t.substr(1, t.size() - 2);
        const auto comma = inner.find(',');
        if (comma == std::string::npos) throw UnparsableLine(lineno, line);
        const std::string ts_text = detail::trim(inner.substr(0, comma));
        const std::string val_text = detail::trim(inner.substr(comma + 1));
        const auto ts = Timestamp::parse(ts_text);
        if (!ts) throw UnparsableLine(lineno, line);
        if (val_text.empty()) throw UnparsableLine(lineno, line);
        char* endp = nullptr;
        const double v = std::strtod(val_text.c_str(), &endp);
        if (endp != val_text.c_str() + val_text.size()) throw UnparsableLine(lineno, line);
        if (!std::isfinite(v)) throw NonFiniteValue("non-finite forecast value: " + val_text);
        if (values.count(ts->seconds())) throw DuplicateTimestamp(ts_text);
        values[ts->seconds()] = v;
    }

    std::vector<double> out;
    out.reserve(expected.size());
    std::vector<std::string> missing, unexpected;
    for (const auto& ts : expected) {
        const auto it = values.find(ts.seconds());
        if (it == values.end())
            missing.push_back(ts.str());
        else
            out.push_back(it->second);
    }
    if (values.size() != expected.size() || !missing.empty()) {
        std::map<std::int64_t, bool> exp;
        for (const auto& ts : expected) exp[ts.seconds()] = true;
        for (const auto& [secs, v] : values)
            if (!exp.count(secs)) unexpected.push_back(Timestamp(secs).str());
        std::string msg = "forecast timestamps do not match the prediction window";
        if (!missing.empty()) msg += "; missing: " + missing.front();
        if (!unexpected.empty()) msg += "; unexpected: " + unexpected.front();
        throw TimestampMismatch(msg);
    }
    return out;
}

/// True for YES, false for NO (trimmed, case-insensitive), read from the
/// first <answer> block.
inline bool parse_judge_verdict(const std::string& text) {
    TaggedBlock block;
    try {
        block = extract_tagged(text, "answer");
    } catch (const MissingOpenTag&) {
        throw MissingAnswerTag();
    } catch (const MissingCloseTag&) {
        throw MissingAnswerTag();
    }
    std::string body = detail::trim(block.body);
    std::transform(body.begin(), body.end(), body.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    if (body == "YES") return true;
    if (body == "NO") return false;
    throw UnrecognizedVerdict(block.body);
}

}  // namespace ctxcast
