#pragma once

// Minimal insertion-ordered JSON writer for run records and reports.
// Floats are rendered with 17 significant digits so records round-trip
// losslessly and diff cleanly; any non-finite numeric aborts serialization.

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace phodge {

class JsonValue {
public:
    using Array = std::vector<JsonValue>;
    using Object = std::vector<std::pair<std::string, JsonValue>>;

    JsonValue() : data_(nullptr) {}
    JsonValue(std::nullptr_t) : data_(nullptr) {}
    JsonValue(bool b) : data_(b) {}
    JsonValue(int v) : data_(static_cast<long long>(v)) {}
    JsonValue(long v) : data_(static_cast<long long>(v)) {}
    JsonValue(long long v) : data_(v) {}
    JsonValue(unsigned long long v) : data_(static_cast<long long>(v)) {}
    JsonValue(double v) : data_(v) {}
    JsonValue(const char* s) : data_(std::string(s)) {}
    JsonValue(std::string s) : data_(std::move(s)) {}
    JsonValue(Array a) : data_(std::move(a)) {}
    JsonValue(Object o) : data_(std::move(o)) {}

    static JsonValue object() { return JsonValue(Object{}); }
    static JsonValue array() { return JsonValue(Array{}); }

    JsonValue& set(const std::string& key, JsonValue v) {
        auto& obj = std::get<Object>(data_);
        obj.emplace_back(key, std::move(v));
        return *this;
    }
    JsonValue& push(JsonValue v) {
        std::get<Array>(data_).push_back(std::move(v));
        return *this;
    }

    std::string dump(int indent = 2) const {
        std::string out;
        write(out, indent, 0);
        out.push_back('\n');
        return out;
    }

private:
    std::variant<std::nullptr_t, bool, long long, double, std::string, Array, Object> data_;

    static void write_escaped(std::string& out, const std::string& s) {
        out.push_back('"');
        for (char c : s) {
            switch (c) {
                case '"': out += "\\\""; break;
                case '\\': out += "\\\\"; break;
                case '\n': out += "\\n"; break;
                case '\t': out += "\\t"; break;
                case '\r': out += "\\r"; break;
                default: out.push_back(c);
            }
        }
        out.push_back('"');
    }

    void write(std::string& out, int indent, int depth) const {
        const std::string pad(static_cast<std::size_t>(indent) * (depth + 1), ' ');
        const std::string close_pad(static_cast<std::size_t>(indent) * depth, ' ');
        if (std::holds_alternative<std::nullptr_t>(data_)) {
            out += "null";
        } else if (const auto* b = std::get_if<bool>(&data_)) {
            out += *b ? "true" : "false";
        } else if (const auto* i = std::get_if<long long>(&data_)) {
            out += std::to_string(*i);
        } else if (const auto* d = std::get_if<double>(&data_)) {
            if (!std::isfinite(*d))
                throw std::runtime_error("records: refusing to serialize non-finite number");
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.17g", *d);
            out += buf;
        } else if (const auto* s = std::get_if<std::string>(&data_)) {
            write_escaped(out, *s);
        } else if (const auto* a = std::get_if<Array>(&data_)) {
            if (a->empty()) {
                out += "[]";
                return;
            }
            out += "[\n";
            for (std::size_t i = 0; i < a->size(); ++i) {
                out += pad;
                (*a)[i].write(out, indent, depth + 1);
                if (i + 1 < a->size()) out.push_back(',');
                out.push_back('\n');
            }
            out += close_pad + "]";
        } else if (const auto* o = std::get_if<Object>(&data_)) {
            if (o->empty()) {
                out += "{}";
                return;
            }
            out += "{\n";
            for (std::size_t i = 0; i < o->size(); ++i) {
                out += pad;
                write_escaped(out, (*o)[i].first);
                out += ": ";
                (*o)[i].second.write(out, indent, depth + 1);
                if (i + 1 < o->size()) out.push_back(',');
                out.push_back('\n');
            }
            out += close_pad + "}";
        }
    }
};

}  // namespace phodge
