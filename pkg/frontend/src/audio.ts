// Audio preview with a single active playback: starting a new preview stops
// the previous one.

export interface PreviewPlayer {
  play(url: string, onError?: () => void): void;
  stop(): void;
}

export class HtmlAudioPreview implements PreviewPlayer {
  private current: HTMLAudioElement | null = null;

  play(url: string, onError?: () => void): void {
    this.stop();
    const element = new Audio(url);
    if (onError) element.onerror = () => onError();
    this.current = element;
    void element.play();
  }

  stop(): void {
    if (this.current) {
      this.current.pause();
      this.current = null;
    }
  }
}
