function merge(dst, src) {
  for (const k in src) {
    const v = src[k];
    if (v && typeof v === "object") {
      if (!dst[k]) {
        dst[k] = {};
      }
      merge(dst[k], v);
    } else {
      dst[k] = v;
    }
  }
  return dst;
}

function apply(target, patch) {
  return merge(target, patch);
}

module.exports = { apply };
