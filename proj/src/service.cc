#include "undf/service.h"

#include <cmath>
#include <random>
#include <sstream>

#include "httplib.h"
#include "undf/errors.h"
#include "undf/wav.h"

namespace undf {

namespace fs = std::filesystem;

namespace {

Json MatrixJson(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json ParseBody(const std::string& body) {
  if (body.empty()) return Json::object();
  try {
    return Json::parse(body);
  } catch (const nlohmann::json::parse_error&) {
    throw ValidationError("request body is not valid JSON");
  }
}

Json ErrorJson(const std::string& kind, const std::string& message) {
  return {{"error", kind}, {"message", message}};
}

bool IsWithin(const fs::path& root, const fs::path& p) {
  const auto r = fs::weakly_canonical(root);
  const auto c = fs::weakly_canonical(p);
  auto ri = r.begin();
  auto ci = c.begin();
  for (; ri != r.end(); ++ri, ++ci) {
    if (ci == c.end() || *ri != *ci) return false;
  }
  return true;
}

std::vector<std::string> SplitPath(const std::string& path) {
  std::vector<std::string> parts;
  std::stringstream ss(path);
  std::string part;
  while (std::getline(ss, part, '/')) {
    if (!part.empty()) parts.push_back(part);
  }
  return parts;
}

}  // namespace

std::shared_ptr<Session> SessionManager::Create(RenderedScene scene, FilterMethod method) {
  auto s = std::make_shared<Session>();
  s->scene = std::move(scene);
  s->method = method;
  std::unique_lock lock(mutex_);
  thread_local std::mt19937_64 rng(std::random_device{}());
  char id[40];
  std::snprintf(id, sizeof(id), "s%llu-%08llx", static_cast<unsigned long long>(++counter_),
                static_cast<unsigned long long>(rng() & 0xffffffffULL));
  s->id = id;
  sessions_[s->id] = s;
  return s;
}

std::shared_ptr<Session> SessionManager::Get(const std::string& id) const {
  std::shared_lock lock(mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) throw NotFoundError("unknown session '" + id + "'");
  return it->second;
}

bool SessionManager::Erase(const std::string& id) {
  std::unique_lock lock(mutex_);
  return sessions_.erase(id) > 0;
}

std::size_t SessionManager::size() const {
  std::shared_lock lock(mutex_);
  return sessions_.size();
}

ServiceApi::ServiceApi(ServiceOptions options) : options_(std::move(options)) {
  stft_ = options_.model ? options_.model->stft : options_.stft;
  stft_.Validate();
  if (options_.model) options_.model->params.CheckShapes(options_.model->arch);
}

int ServiceApi::pattern_length() const {
  return options_.model ? options_.model->arch.pattern_length : kDefaultPatternLength;
}

Filter ServiceApi::FilterFor(FilterMethod method) const {
  if (method == FilterMethod::kNeural) {
    if (!options_.model) throw ValidationError("method 'neural' needs the service to be started with a model");
    return Filter::Neural(options_.model);
  }
  return Filter::Oracle(stft_);
}

FilterMethod ServiceApi::ResolveMethod(const Json& body, FilterMethod fallback) const {
  if (body.is_object() && body.contains("method")) return ParseFilterMethod(Field<std::string>(body, "method"));
  return fallback;
}

Json ServiceApi::SessionInfo(const Session& s) const {
  Json doas = Json::array();
  for (double d : s.scene.doas) doas.push_back(RadToDeg(d));
  return {{"id", s.id},
          {"method", FilterMethodName(s.method)},
          {"sample_rate", s.scene.sample_rate},
          {"num_samples", s.scene.reference().size()},
          {"num_mics", s.scene.mic_signals.size()},
          {"frames", stft_.NumFrames(s.scene.reference().size())},
          {"hop", stft_.hop},
          {"pattern_length", pattern_length()},
          {"source_doas_deg", doas},
          {"has_components", !s.scene.ref_components.empty()}};
}

Json ServiceApi::CreateSession(const Json& body) {
  if (!body.is_object()) throw ValidationError("session: expected a JSON object");
  const FilterMethod fallback = options_.model ? FilterMethod::kNeural : FilterMethod::kParametricOracle;
  const FilterMethod method = ResolveMethod(body, fallback);
  FilterFor(method);  // reject "neural" early when no model is loaded

  RenderedScene scene;
  if (body.contains("mics_wav_base64")) {
    const WavData mics = ParseWav(Base64Decode(Field<std::string>(body, "mics_wav_base64")));
    if (mics.sample_rate != stft_.sample_rate) {
      throw ValidationError("session: uploads must be " + std::to_string(stft_.sample_rate) + " Hz");
    }
    scene.sample_rate = mics.sample_rate;
    scene.mic_signals = mics.channels;
    for (const auto& c : FieldOr<Json>(body, "components", Json::array())) {
      const WavData w = ParseWav(Base64Decode(Field<std::string>(c, "wav_base64")));
      if (w.num_channels() != 1 || w.num_samples() != mics.num_samples() || w.sample_rate != mics.sample_rate) {
        throw ValidationError("session: each component must be mono and match the mic recording");
      }
      scene.ref_components.push_back(w.channels.front());
      scene.doas.push_back(DegToRad(Field<double>(c, "doa_deg")));
    }
  } else {
    for (const auto& src : FieldOr<Json>(body, "sources", Json::array())) {
      if (!src.contains("wav_path")) continue;
      const fs::path p = Field<std::string>(src, "wav_path");
      if (p.is_absolute() || !IsWithin(options_.data_root, options_.data_root / p)) {
        throw ValidationError("session: wav_path must be relative and inside the data directory");
      }
    }
    const SceneSpec spec = SceneFromJson(body, options_.data_root);
    if (spec.duration > options_.max_duration_s) throw ValidationError("session: scene too long");
    if (spec.sample_rate != stft_.sample_rate) {
      throw ValidationError("session: scene sample_rate must be " + std::to_string(stft_.sample_rate));
    }
    if (spec.sources.empty()) throw ValidationError("session: scene needs at least one source");
    scene = RenderMics(spec, BuildDefaultArray());
  }
  if (scene.mic_signals.empty() || scene.reference().empty()) throw ValidationError("session: empty recording");
  if (static_cast<double>(scene.reference().size()) > options_.max_duration_s * scene.sample_rate) {
    throw ValidationError("session: recording too long");
  }
  if (method == FilterMethod::kNeural &&
      static_cast<int>(scene.mic_signals.size()) != options_.model->arch.mics) {
    throw ValidationError("session: model expects " + std::to_string(options_.model->arch.mics) + " microphones");
  }
  auto s = sessions_.Create(std::move(scene), method);
  std::lock_guard lock(s->mutex);
  s->timeline = {{0, PatternVector{std::vector<double>(pattern_length(), 1.0)}}};
  return SessionInfo(*s);
}

Json ServiceApi::CreateSessionFromWav(std::span<const std::uint8_t> wav, const std::string& method) {
  Json body = {{"mics_wav_base64", Base64Encode(wav)}};
  if (!method.empty()) body["method"] = method;
  return CreateSession(body);
}

std::vector<TimelineEntry> ServiceApi::ParseServiceTimeline(const Json& body) const {
  const Json& arr = body.is_object() && body.contains("timeline") ? body.at("timeline") : body;
  if (!arr.is_array()) throw ValidationError("timeline: expected an array of {start_frame, gains}");
  for (const auto& e : arr) {
    if (!e.is_object() || !e.contains("gains")) {
      throw ValidationError("timeline: entries carry pattern vectors ({start_frame, gains}); resolve analytic "
                            "specs with POST /patterns/resolve");
    }
  }
  return TimelineFromJson(arr, pattern_length());
}

Json ServiceApi::SetTimeline(const std::string& id, const Json& body) {
  auto s = sessions_.Get(id);
  auto timeline = ParseServiceTimeline(body);
  std::lock_guard lock(s->mutex);
  const int frames = stft_.NumFrames(s->scene.reference().size());
  if (timeline.back().start_frame >= frames) {
    throw ValidationError("timeline: start_frame beyond the last frame (" + std::to_string(frames - 1) + ")");
  }
  s->timeline = std::move(timeline);
  s->last_render.reset();
  Json starts = Json::array();
  for (const auto& e : s->timeline) starts.push_back(e.start_frame);
  return {{"id", s->id}, {"segments", s->timeline.size()}, {"start_frames", starts}, {"frames", frames}};
}

TimelineRender ServiceApi::RenderLocked(Session& s, const Json& body) {
  if (body.is_object() && body.contains("timeline")) {
    auto timeline = ParseServiceTimeline(body.at("timeline"));
    s.timeline = std::move(timeline);
  }
  const FilterMethod method = ResolveMethod(body, s.method);
  TimelineRender r = ProcessTimeline(s.scene, s.timeline, FilterFor(method));
  s.last_render = r;
  return r;
}

Json ServiceApi::Render(const std::string& id, const Json& body) {
  auto s = sessions_.Get(id);
  std::lock_guard lock(s->mutex);
  const TimelineRender r = RenderLocked(*s, body);
  Json segments = Json::array();
  for (std::size_t k = 0; k < r.segment_patterns.size(); ++k) {
    segments.push_back({{"start_frame", s->timeline[k].start_frame}, {"gains", r.segment_patterns[k].gains}});
  }
  Json j = {{"id", s->id},
            {"method", FilterMethodName(ResolveMethod(body, s->method))},
            {"sample_rate", s->scene.sample_rate},
            {"frames", r.frame_pattern_index.size()},
            {"wav_base64", Base64Encode(EncodeWav(WavData{s->scene.sample_rate, {r.processed}}))},
            {"segments", segments},
            {"frame_pattern_index", r.frame_pattern_index},
            {"source_gains", MatrixJson(r.source_gains)}};
  if (FieldOr<bool>(body, "spectrogram", true)) {
    j["spectrogram_db"] = {{"unprocessed", MatrixJson(r.unprocessed_db)}, {"processed", MatrixJson(r.processed_db)}};
  }
  j["sdr_db"] = r.sdr ? Json(*r.sdr) : Json(nullptr);
  return j;
}

std::vector<std::uint8_t> ServiceApi::RenderWav(const std::string& id, const Json& body) {
  auto s = sessions_.Get(id);
  std::lock_guard lock(s->mutex);
  const TimelineRender r = RenderLocked(*s, body);
  return EncodeWav(WavData{s->scene.sample_rate, {r.processed}});
}

Json ServiceApi::Metrics(const std::string& id) {
  auto s = sessions_.Get(id);
  std::lock_guard lock(s->mutex);
  if (!s->last_render) RenderLocked(*s, Json::object());
  const TimelineRender& r = *s->last_render;
  Json j = {{"id", s->id}, {"has_target", r.target.has_value()}};
  j["sdr_db"] = r.sdr ? Json(*r.sdr) : Json(nullptr);
  j["sdr_unprocessed_db"] = r.sdr_unprocessed ? Json(*r.sdr_unprocessed) : Json(nullptr);
  j["sdr_improvement_db"] = r.sdr ? Json(*r.sdr - *r.sdr_unprocessed) : Json(nullptr);
  return j;
}

Json ServiceApi::DeleteSession(const std::string& id) {
  if (!sessions_.Erase(id)) throw NotFoundError("unknown session '" + id + "'");
  return {{"id", id}, {"deleted", true}};
}

Json ServiceApi::Recipes(const std::optional<std::string>& recipe, std::uint64_t seed, int count) const {
  if (!recipe) {
    return {{"pattern_length", pattern_length()},
            {"recipes",
             {{{"name", "a"}, {"description", "first-order grid, mu x steering, 60 patterns"}},
              {{"name", "bminus"}, {"description", "random first-order DMA combinations"}},
              {{"name", "b"}, {"description", "random DMA combinations up to third order"}},
              {{"name", "bplus"}, {"description", "random DMA and rectangular combinations"}}}}};
  }
  RecipeConfig cfg;
  cfg.recipe = ParseRecipe(*recipe);
  cfg.rng_seed = seed;
  if (count > 0) cfg.patterns_per_setup = count;
  if (cfg.patterns_per_setup > 10000) throw ValidationError("recipes: count too large");
  Json patterns = Json::array();
  for (const auto& p : RecipePatterns(cfg)) {
    Json v = PatternVectorToJson(SamplePattern(p, pattern_length()));
    v["spec"] = AnalyticPatternToJson(p);
    patterns.push_back(std::move(v));
  }
  return {{"recipe", RecipeName(cfg.recipe)}, {"seed", seed}, {"patterns", patterns}};
}

Json ServiceApi::ResolvePattern(const Json& body) const {
  const int length = FieldOr<int>(body, "l", pattern_length());
  const Json& spec = body.contains("pattern") ? body.at("pattern") : body;
  return PatternVectorToJson(ConditioningVector(GainPatternFromJson(spec), length));
}

HttpResponse ServiceApi::Handle(const std::string& method, const std::string& path, const std::string& body,
                                const std::string& content_type,
                                const std::map<std::string, std::string>& query) {
  HttpResponse res;
  const auto parts = SplitPath(path);
  auto json_ok = [&](const Json& j, int status = 200) {
    res.status = status;
    res.content_type = "application/json";
    res.body = j.dump();
  };
  try {
    if (method == "POST" && parts == std::vector<std::string>{"sessions"}) {
      if (content_type.starts_with("audio/")) {
        const std::vector<std::uint8_t> bytes(body.begin(), body.end());
        const auto m = query.find("method");
        json_ok(CreateSessionFromWav(bytes, m == query.end() ? "" : m->second), 201);
      } else {
        json_ok(CreateSession(ParseBody(body)), 201);
      }
    } else if (parts.size() == 3 && parts[0] == "sessions" && method == "POST" && parts[2] == "timeline") {
      json_ok(SetTimeline(parts[1], ParseBody(body)));
    } else if (parts.size() == 3 && parts[0] == "sessions" && method == "POST" && parts[2] == "render") {
      const auto f = query.find("format");
      if (f != query.end() && f->second == "wav") {
        const auto wav = RenderWav(parts[1], ParseBody(body));
        res.content_type = "audio/wav";
        res.body.assign(wav.begin(), wav.end());
      } else {
        json_ok(Render(parts[1], ParseBody(body)));
      }
    } else if (parts.size() == 3 && parts[0] == "sessions" && method == "GET" && parts[2] == "metrics") {
      json_ok(Metrics(parts[1]));
    } else if (parts.size() == 2 && parts[0] == "sessions" && method == "DELETE") {
      json_ok(DeleteSession(parts[1]));
    } else if (method == "GET" && parts == std::vector<std::string>{"patterns", "recipes"}) {
      std::optional<std::string> recipe;
      std::uint64_t seed = 0;
      int count = 0;
      if (auto it = query.find("recipe"); it != query.end()) recipe = it->second;
      try {
        if (auto it = query.find("seed"); it != query.end()) seed = std::stoull(it->second);
        if (auto it = query.find("count"); it != query.end()) count = std::stoi(it->second);
      } catch (const std::logic_error&) {
        throw ValidationError("recipes: seed and count must be integers");
      }
      json_ok(Recipes(recipe, seed, count));
    } else if (method == "POST" && parts == std::vector<std::string>{"patterns", "resolve"}) {
      json_ok(ResolvePattern(ParseBody(body)));
    } else if (method == "GET" && parts == std::vector<std::string>{"health"}) {
      json_ok({{"status", "ok"}, {"sessions", sessions_.size()}});
    } else {
      json_ok(ErrorJson("not_found", "no route for " + method + " " + path), 404);
    }
  } catch (const NotFoundError& e) {
    json_ok(ErrorJson("not_found", e.what()), 404);
  } catch (const ValidationError& e) {
    json_ok(ErrorJson("validation", e.what()), 400);
  } catch (const DegeneratePatternError& e) {
    json_ok(ErrorJson("validation", e.what()), 400);
  } catch (const IngestionError& e) {
    json_ok(ErrorJson("ingestion", e.what()), 422);
  } catch (const std::exception& e) {
    json_ok(ErrorJson("internal", e.what()), 500);
  }
  return res;
}

struct HttpServer::Impl {
  ServiceApi& api;
  httplib::Server server;
  std::thread thread;

  explicit Impl(ServiceApi& a) : api(a) {
    auto handler = [this](const httplib::Request& req, httplib::Response& res) {
      std::map<std::string, std::string> query;
      for (const auto& [k, v] : req.params) query[k] = v;
      const HttpResponse out =
          api.Handle(req.method, req.path, req.body, req.get_header_value("Content-Type"), query);
      res.status = out.status;
      res.set_content(out.body, out.content_type);
    };
    server.Get(R"(/.*)", handler);
    server.Post(R"(/.*)", handler);
    server.Delete(R"(/.*)", handler);
    server.set_payload_max_length(512ull << 20);
  }
};

HttpServer::HttpServer(ServiceApi& api) : impl_(std::make_unique<Impl>(api)) {}

HttpServer::~HttpServer() { Stop(); }

int HttpServer::Bind(const std::string& host, int port) {
  const int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw ValidationError("cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void HttpServer::Listen() { impl_->server.listen_after_bind(); }

int HttpServer::Start(const std::string& host, int port) {
  const int bound = Bind(host, port);
  impl_->thread = std::thread([this] { Listen(); });
  impl_->server.wait_until_ready();
  return bound;
}

void HttpServer::Stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace undf
