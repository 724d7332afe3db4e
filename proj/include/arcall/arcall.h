/* SPDX-License-Identifier: Apache-2.0 */

#ifndef ARCALL_ARCALL_H
#define ARCALL_ARCALL_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define ARCALL_API __declspec(dllexport)
#else
#define ARCALL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum arcall_status {
  ARCALL_OK = 0,
  ARCALL_E_INVALID_ARGUMENT = 1,
  ARCALL_E_INVALID_CONFIG = 2,
  ARCALL_E_CORRUPT_STORE = 3,
  ARCALL_E_IO = 4,
  ARCALL_E_BIND = 5,
  ARCALL_E_SCENARIO_INVALID = 6,
  ARCALL_E_MALFORMED_LOG = 7,
  ARCALL_E_DECODE = 8,
  ARCALL_E_UNKNOWN_CONTENT = 9,
  ARCALL_E_INTERNAL = 99
} arcall_status;

/* Static name of a status code, e.g. "ARCALL_E_CORRUPT_STORE". */
ARCALL_API const char* arcall_status_string(arcall_status status);

/* Detail for the last failing call on this thread; "" after success. */
ARCALL_API const char* arcall_last_error(void);

/* Frees any buffer returned through a char** / uint8_t** out parameter. */
ARCALL_API void arcall_free(void* ptr);

ARCALL_API const char* arcall_version(void);

/* ---- persistent store (friendships, preferences, tokens) ---------------- */

typedef struct arcall_store arcall_store;

/* Loads the store in dir (created if missing). Every mutation persists immediately. */
ARCALL_API arcall_status arcall_store_open(const char* dir, arcall_store** out);
ARCALL_API void arcall_store_close(arcall_store* store);
ARCALL_API arcall_status arcall_store_befriend(arcall_store* store, const char* a, const char* b);
ARCALL_API arcall_status arcall_store_unfriend(arcall_store* store, const char* a, const char* b);
ARCALL_API arcall_status arcall_store_set_token(arcall_store* store, const char* user, const char* token);
/* config_json: {"arcall_duration_s":..,"dropin_duration_s":..,"blur_level":..,"friend":..,
   "presence_indicator":..}; validated before it is stored. */
ARCALL_API arcall_status arcall_store_set_preferences(arcall_store* store, const char* wearer,
                                                      const char* config_json);
ARCALL_API arcall_status arcall_store_dump(const arcall_store* store, char** json_out);

/* ---- relay server ---------------------------------------------------------- */

typedef struct arcall_server arcall_server;

typedef struct arcall_server_options {
  const char* listen_addr; /* "host:port", port 0 picks a free port */
  const char* ws_addr;
  const char* store_dir;
  const char* static_dir; /* NULL or "": no static serving */
  double glasses_fraction;
  const char* log_level; /* error | warn | info | debug */
} arcall_server_options;

ARCALL_API void arcall_server_options_init(arcall_server_options* options);
ARCALL_API arcall_status arcall_server_create(const arcall_server_options* options, arcall_server** out);
ARCALL_API arcall_status arcall_server_start(arcall_server* server);
ARCALL_API uint16_t arcall_server_tcp_port(const arcall_server* server);
ARCALL_API uint16_t arcall_server_ws_port(const arcall_server* server);
/* Blocks until arcall_server_stop is called from another thread. */
ARCALL_API void arcall_server_wait(arcall_server* server);
ARCALL_API void arcall_server_stop(arcall_server* server);
ARCALL_API void arcall_server_destroy(arcall_server* server);

/* ---- simulation harness -------------------------------------------------- */

typedef struct arcall_sim_options {
  uint64_t seed;
  int64_t base_delay_ms;
  int64_t jitter_ms;
  int64_t processing_ms;
  double initial_temp_c; /* NaN: start at ambient */
  double ambient_c;
  double heat_c_per_s;
  double cool_c_per_s;
  double cutoff_c;
} arcall_sim_options;

ARCALL_API void arcall_sim_options_init(arcall_sim_options* options);
ARCALL_API arcall_status arcall_sim_run(const char* scenario_json, const arcall_sim_options* options,
                                        char** log_jsonl);
ARCALL_API arcall_status arcall_sim_metrics(const char* log_jsonl, char** report_json);
ARCALL_API arcall_status arcall_sim_latency(const char* log_jsonl, double budget_ms, char** report_json);
ARCALL_API double arcall_sim_analytic_e2e_median_ms(const arcall_sim_options* options);

/* ---- protocol -------------------------------------------------------------- */

/* message_json: {"type":"ExtendTap","dropin_id":"d1"}; media messages take "payload_hex". */
ARCALL_API arcall_status arcall_encode_json(const char* message_json, uint8_t** bytes, size_t* len);
ARCALL_API arcall_status arcall_decode(const uint8_t* bytes, size_t len, char** message_json, size_t* consumed);

/* ---- session / media ------------------------------------------------------- */

ARCALL_API arcall_status arcall_validate_config(const char* config_json, char** normalized_json);
/* Blurs a binary PGM (P5) image; output is P5 as well. */
ARCALL_API arcall_status arcall_blur_pgm(const uint8_t* pgm, size_t len, int level, uint8_t** out, size_t* out_len);
ARCALL_API arcall_status arcall_view_mismatch(const char* content_id, double anchor_x, double anchor_y,
                                              double glasses_fraction, double* out);

#ifdef __cplusplus
}
#endif

#endif /* ARCALL_ARCALL_H */
