export class DownloadFailure extends Error {
  constructor(message: string) {
    super(message);
    this.name = "DownloadFailure";
  }
}

export class ModelLoadFailure extends Error {
  constructor(message: string) {
    super(message);
    this.name = "ModelLoadFailure";
  }
}

export class UsageError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "UsageError";
  }
}
