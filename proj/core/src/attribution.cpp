// Copyright (c) 2026 The referi Authors
// SPDX-License-Identifier: Apache-2.0

#include "referi/attribution.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace referi {

std::vector<bool> attribution_mask(const std::vector<double>& differences) {
  const std::size_t n = differences.size();
  if (n == 0) throw ValueError("attribution over zero tokens");
  const std::size_t keep = static_cast<std::size_t>(std::ceil(0.6 * static_cast<double>(n)));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(differences[a]) > std::abs(differences[b]);
  });
  std::vector<bool> mask(n, false);
  for (std::size_t i = 0; i < keep; ++i) mask[order[i]] = true;
  return mask;
}

TokenAttribution token_attribution(
    const std::vector<std::vector<std::pair<std::string, double>>>& per_candidate_tokens,
    const std::vector<bool>& correct) {
  if (per_candidate_tokens.size() != correct.size())
    throw ValueError("token lists and correctness flags disagree in length");
  const std::size_t n_correct = std::count(correct.begin(), correct.end(), true);
  if (n_correct == 0 || n_correct == correct.size())
    throw ValueError("attribution undefined: needs at least one correct and one incorrect candidate");
  if (per_candidate_tokens.empty() || per_candidate_tokens.front().empty())
    throw ValueError("attribution over zero tokens");

  const std::size_t T = per_candidate_tokens.front().size();
  for (const auto& tokens : per_candidate_tokens) {
    if (tokens.size() != T) throw ValueError("token sequences misaligned across candidates");
    for (std::size_t t = 0; t < T; ++t)
      if (tokens[t].first != per_candidate_tokens.front()[t].first)
        throw ValueError("token texts misaligned across candidates");
  }

  TokenAttribution att;
  att.tokens.reserve(T);
  att.difference.assign(T, 0.0);
  for (std::size_t t = 0; t < T; ++t) att.tokens.push_back(per_candidate_tokens.front()[t].first);

  for (std::size_t t = 0; t < T; ++t) {
    double sum_c = 0.0, sum_i = 0.0;
    for (std::size_t k = 0; k < correct.size(); ++k) {
      if (correct[k])
        sum_c += per_candidate_tokens[k][t].second;
      else
        sum_i += per_candidate_tokens[k][t].second;
    }
    const double mean_c = sum_c / static_cast<double>(n_correct);
    const double mean_i = sum_i / static_cast<double>(correct.size() - n_correct);
    att.difference[t] = mean_c - mean_i;
  }

  att.mask = attribution_mask(att.difference);
  std::size_t red = 0;
  for (std::size_t t = 0; t < T; ++t)
    if (att.mask[t] && att.difference[t] < 0.0) ++red;
  att.red_ratio = static_cast<double>(red) / static_cast<double>(T);
  return att;
}

std::string render_attribution_text(const TokenAttribution& att) {
  std::string out;
  for (std::size_t t = 0; t < att.tokens.size(); ++t) {
    if (t > 0) out += " ";
    if (!att.mask[t]) {
      out += att.tokens[t];
    } else if (att.difference[t] < 0.0) {
      out += "[-" + att.tokens[t] + "]";
    } else {
      out += "[+" + att.tokens[t] + "]";
    }
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), " (red ratio %.2f)", att.red_ratio);
  out += buf;
  return out;
}

namespace {
std::string html_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}
}  // namespace

std::string render_attribution_html(const TokenAttribution& att, const std::string& title) {
  std::string out =
      "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\">\n<style>\n"
      ".att-neg { background: #ffd2d2; }\n"
      ".att-pos { background: #d2ddff; }\n"
      "body { font-family: monospace; line-height: 1.8; margin: 2em; }\n"
      "</style>\n<title>" +
      html_escape(title) + "</title></head><body>\n<h3>" + html_escape(title) + "</h3>\n<p>\n";
  for (std::size_t t = 0; t < att.tokens.size(); ++t) {
    if (t > 0) out += " ";
    const std::string tok = html_escape(att.tokens[t]);
    if (!att.mask[t]) {
      out += tok;
    } else if (att.difference[t] < 0.0) {
      out += "<span class=\"att-neg\">" + tok + "</span>";
    } else {
      out += "<span class=\"att-pos\">" + tok + "</span>";
    }
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", att.red_ratio);
  out += "\n</p>\n<p>red ratio: " + std::string(buf) + "</p>\n</body></html>\n";
  return out;
}

}  // namespace referi
