#include "ecglab/time_util.hpp"
#include "ecglab/errors.hpp"

#include <cstdio>
#include <ctime>

namespace ecglab {

namespace {

bool read_digits(std::string_view s, std::size_t& i, int n, long& out) {
    long v = 0;
    for (int k = 0; k < n; ++k) {
        if (i >= s.size() || s[i] < '0' || s[i] > '9') return false;
        v = v * 10 + (s[i] - '0');
        ++i;
    }
    out = v;
    return true;
}

bool expect(std::string_view s, std::size_t& i, char c) {
    if (i >= s.size() || s[i] != c) return false;
    ++i;
    return true;
}

} // namespace

TimeMicros parse_iso8601_micros(std::string_view s) {
    std::size_t i = 0;
    long year, month, day, hour, minute, second;
    bool ok = read_digits(s, i, 4, year) && expect(s, i, '-') &&
              read_digits(s, i, 2, month) && expect(s, i, '-') &&
              read_digits(s, i, 2, day) && expect(s, i, 'T') &&
              read_digits(s, i, 2, hour) && expect(s, i, ':') &&
              read_digits(s, i, 2, minute) && expect(s, i, ':') &&
              read_digits(s, i, 2, second);
    long micros = 0;
    if (ok && i < s.size() && s[i] == '.') {
        ++i;
        int digits = 0;
        while (i < s.size() && s[i] >= '0' && s[i] <= '9' && digits < 6) {
            micros = micros * 10 + (s[i] - '0');
            ++i;
            ++digits;
        }
        ok = digits > 0;
        for (int k = digits; k < 6; ++k) micros *= 10;
    }
    if (ok && i < s.size() && s[i] == 'Z') ++i;
    if (!ok || i != s.size())
        throw FormatError("bad ISO-8601 timestamp: '" + std::string(s) + "'");
    if (month < 1 || month > 12 || day < 1 || day > 31 || hour > 23 ||
        minute > 59 || second > 60)
        throw DataError("out-of-range ISO-8601 timestamp: '" + std::string(s) + "'");

    std::tm tm{};
    tm.tm_year = static_cast<int>(year - 1900);
    tm.tm_mon = static_cast<int>(month - 1);
    tm.tm_mday = static_cast<int>(day);
    tm.tm_hour = static_cast<int>(hour);
    tm.tm_min = static_cast<int>(minute);
    tm.tm_sec = static_cast<int>(second);
    std::time_t secs = timegm(&tm);
    return static_cast<TimeMicros>(secs) * kMicrosPerSecond + micros;
}

std::string format_iso8601_micros(TimeMicros t) {
    std::int64_t secs = t / kMicrosPerSecond;
    std::int64_t micros = t % kMicrosPerSecond;
    if (micros < 0) {
        micros += kMicrosPerSecond;
        secs -= 1;
    }
    std::time_t ts = static_cast<std::time_t>(secs);
    std::tm tm{};
    gmtime_r(&ts, &tm);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d.%06lldZ",
                  tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday, tm.tm_hour,
                  tm.tm_min, tm.tm_sec, static_cast<long long>(micros));
    return buf;
}

} // namespace ecglab
