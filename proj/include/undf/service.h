#pragma once

// Session-based filtering service. ServiceApi holds all behavior and speaks
// JSON / bytes, so it can be driven without a socket; HttpServer maps it
// onto HTTP routes.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

#include "undf/checkpoint.h"
#include "undf/dataset.h"
#include "undf/io.h"
#include "undf/pipeline.h"
#include "undf/scene.h"

namespace undf {

struct ServiceOptions {
  std::shared_ptr<const Checkpoint> model;  // optional; enables method "neural"
  StftConfig stft;                          // used when no model is loaded
  // Scene specs may only reference WAV files below this directory.
  std::filesystem::path data_root = ".";
  double max_duration_s = 120.0;
};

struct Session {
  std::string id;
  RenderedScene scene;
  FilterMethod method = FilterMethod::kParametricOracle;
  std::vector<TimelineEntry> timeline;
  std::optional<TimelineRender> last_render;
  std::mutex mutex;  // serializes work on this session
};

class SessionManager {
 public:
  std::shared_ptr<Session> Create(RenderedScene scene, FilterMethod method);
  // Throws NotFoundError.
  std::shared_ptr<Session> Get(const std::string& id) const;
  bool Erase(const std::string& id);
  std::size_t size() const;

 private:
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t counter_ = 0;
};

struct HttpResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

class ServiceApi {
 public:
  explicit ServiceApi(ServiceOptions options);

  const StftConfig& stft() const { return stft_; }
  int pattern_length() const;

  // Body: a scene spec ({"sources": [...]}), or uploaded audio
  // ({"mics_wav_base64": ..., "components": [{"wav_base64", "doa_deg"}]}).
  // Optional "method". Returns {"id", "frames", "num_mics", ...}.
  Json CreateSession(const Json& body);
  Json CreateSessionFromWav(std::span<const std::uint8_t> wav, const std::string& method = {});
  // Body: [{"start_frame", "gains"}] or {"timeline": [...]}; gains must have length L.
  Json SetTimeline(const std::string& id, const Json& body);
  // Body may carry "timeline" (replaces the stored one), "method" and
  // "spectrogram": false to skip the dB frames.
  Json Render(const std::string& id, const Json& body);
  std::vector<std::uint8_t> RenderWav(const std::string& id, const Json& body);
  Json Metrics(const std::string& id);
  Json DeleteSession(const std::string& id);
  // Without a recipe: the catalogue; with one: its pattern vectors.
  Json Recipes(const std::optional<std::string>& recipe, std::uint64_t seed, int count) const;
  // Analytic spec -> pattern vector of length L.
  Json ResolvePattern(const Json& body) const;

  // Routes a request; maps ValidationError to 400, NotFoundError to 404,
  // IngestionError to 422 and anything else to 500.
  HttpResponse Handle(const std::string& method, const std::string& path, const std::string& body,
                      const std::string& content_type,
                      const std::map<std::string, std::string>& query = {});

  SessionManager& sessions() { return sessions_; }

 private:
  Filter FilterFor(FilterMethod method) const;
  FilterMethod ResolveMethod(const Json& body, FilterMethod fallback) const;
  std::vector<TimelineEntry> ParseServiceTimeline(const Json& body) const;
  TimelineRender RenderLocked(Session& s, const Json& body);
  Json SessionInfo(const Session& s) const;

  ServiceOptions options_;
  StftConfig stft_;
  SessionManager sessions_;
};

// Blocking HTTP front end for ServiceApi.
class HttpServer {
 public:
  explicit HttpServer(ServiceApi& api);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Port 0 picks a free port; returns the bound port.
  int Bind(const std::string& host, int port);
  void Listen();  // blocks until Stop()
  // Bind + Listen on a background thread.
  int Start(const std::string& host, int port);
  void Stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace undf
