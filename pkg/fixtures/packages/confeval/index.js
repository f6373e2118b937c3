function loadConfig(text) {
  if (typeof text !== "string" || text.indexOf("=") < 0) {
    return null;
  }
  const body = text.split("=")[1];
  return eval("(" + body + ")");
}

module.exports = { loadConfig };
