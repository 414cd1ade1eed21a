#ifndef OMODULE_H
#define OMODULE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible entry point.
 */
typedef enum OmodStatus {
  /**
   * Success.
   */
  OmodStatus_Ok = 0,
  /**
   * Mathematical or operational failure; see omod_last_error.
   */
  OmodStatus_Error = 1,
  /**
   * Invalid arguments or expression grammar; see omod_last_error.
   */
  OmodStatus_Usage = 2,
  /**
   * A required pointer argument was null.
   */
  OmodStatus_NullArg = 3,
  /**
   * Internal panic; see omod_last_error.
   */
  OmodStatus_Panic = 4,
} OmodStatus;

/**
 * Opaque certificate handle.
 */
typedef struct OmodCertificate OmodCertificate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version string; static, do not free.
 */
const char *omod_version(void);

/**
 * Message for the most recent failure on this thread; valid until the
 * next failing call. Do not free.
 */
const char *omod_last_error(void);

/**
 * Order of GL_k over o/(w^m) with residue field of size q, written to
 * `out`.
 */
enum OmodStatus omod_gl_order(uint32_t k, uint32_t m, uint64_t q, uint64_t *out);

/**
 * Run a surjectivity certification. `specs` is an array of `nspecs`
 * assignment strings such as "u0=t,u1=t^2". On success `*out` owns a
 * certificate handle; release it with omod_certificate_free.
 */
enum OmodStatus omod_certify_run(uint64_t q,
                                 uint32_t n,
                                 uint32_t h,
                                 uint32_t m,
                                 const char *const *specs,
                                 uintptr_t nspecs,
                                 int64_t precision,
                                 struct OmodCertificate **out);

/**
 * 1 if the certificate's verdict is "surjective", 0 if inconclusive,
 * -1 on null.
 */
int32_t omod_certificate_is_surjective(const struct OmodCertificate *cert);

/**
 * Certificate as a JSON string; release with omod_string_free. Null on
 * null input.
 */
char *omod_certificate_json(const struct OmodCertificate *cert);

/**
 * Release a certificate handle. Null is ignored.
 */
void omod_certificate_free(struct OmodCertificate *cert);

/**
 * Run identity checks on one specialization. `checks` selects from
 * "eq31", "eq41", "nonvanishing"; pass length 0 for all applicable. On
 * success `*out_json` owns the JSON report (release with
 * omod_string_free) and the status is Ok when every check passed,
 * Error when some check failed.
 */
enum OmodStatus omod_identities_run(uint64_t q,
                                    uint32_t n,
                                    uint32_t h,
                                    uint32_t m,
                                    const char *spec,
                                    const char *const *checks,
                                    uintptr_t nchecks,
                                    int64_t precision,
                                    char **out_json);

/**
 * Release a string returned by this library. Null is ignored.
 */
void omod_string_free(char *s);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* OMODULE_H */
